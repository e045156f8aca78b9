#include <doctest.h>

#include <array>
#include <cmath>
#include <map>

#include "pagrefine/bayesnet.hpp"
#include "pagrefine/errors.hpp"
#include "pagrefine/rng.hpp"

using namespace pagrefine;

TEST_CASE("validate accepts a well-formed two-node net") {
    BayesNet bn;
    bn.nodes.resize(2);
    bn.nodes[0] = {"A", 2, {}, Matrix(1, 2)};
    bn.nodes[0].cpt(0, 0) = 0.4;
    bn.nodes[0].cpt(0, 1) = 0.6;
    bn.nodes[1] = {"B", 2, {0}, Matrix(2, 2)};
    bn.nodes[1].cpt(0, 0) = 0.9;
    bn.nodes[1].cpt(0, 1) = 0.1;
    bn.nodes[1].cpt(1, 0) = 0.3;
    bn.nodes[1].cpt(1, 1) = 0.7;
    CHECK(validate(bn).empty());
}

TEST_CASE("validate reports bad rows and cycles with locations") {
    BayesNet bn;
    bn.nodes.resize(2);
    bn.nodes[0] = {"A", 2, {1}, Matrix(2, 2, 0.5)};
    bn.nodes[1] = {"B", 2, {0}, Matrix(2, 2, 0.5)};
    bn.nodes[1].cpt(1, 0) = 0.5;
    bn.nodes[1].cpt(1, 1) = 0.4; // sums to 0.9
    const auto errors = validate(bn);
    REQUIRE(errors.size() >= 2);
    bool found_row = false, found_cycle = false;
    for (const auto& e : errors) {
        if (e.find("row 1") != std::string::npos && e.find("B") != std::string::npos) {
            found_row = true;
        }
        if (e.find("cycle") != std::string::npos) found_cycle = true;
    }
    CHECK(found_row);
    CHECK(found_cycle);
}

TEST_CASE("validate rejects wrong cpt shapes") {
    BayesNet bn;
    bn.nodes.resize(2);
    bn.nodes[0] = {"A", 3, {}, Matrix(1, 3, 1.0 / 3.0)};
    bn.nodes[1] = {"B", 2, {0}, Matrix(2, 2, 0.5)}; // needs 3 rows
    const auto errors = validate(bn);
    REQUIRE(errors.size() == 1);
    CHECK(errors[0].find("expected 3x2") != std::string::npos);
}

TEST_CASE("deterministic CPTs force every sample to one configuration") {
    BayesNet bn;
    bn.nodes.resize(2);
    bn.nodes[0] = {"A", 2, {}, Matrix(1, 2)};
    bn.nodes[0].cpt(0, 1) = 1.0;
    bn.nodes[1] = {"B", 2, {0}, Matrix(2, 2)};
    bn.nodes[1].cpt(0, 0) = 1.0;
    bn.nodes[1].cpt(1, 0) = 1.0; // B = 0 regardless of A
    const auto ds = forward_sample(bn, 50, 9);
    for (std::size_t n = 0; n < ds.sample_count; ++n) {
        CHECK(ds.code(n, 0) == 1);
        CHECK(ds.code(n, 1) == 0);
    }
}

TEST_CASE("root frequencies land inside the binomial three-sigma band") {
    BayesNet bn;
    bn.nodes.resize(1);
    bn.nodes[0] = {"A", 2, {}, Matrix(1, 2)};
    bn.nodes[0].cpt(0, 0) = 0.7;
    bn.nodes[0].cpt(0, 1) = 0.3;
    const std::size_t n = 10000;
    const auto ds = forward_sample(bn, n, 31);
    std::size_t ones = 0;
    for (std::size_t r = 0; r < n; ++r) ones += ds.code(r, 0) == 1;
    const double freq = static_cast<double>(ones) / n;
    const double band = 3.0 * std::sqrt(0.3 * 0.7 / n);
    CHECK(std::abs(freq - 0.3) < band);
}

TEST_CASE("same seed reproduces the dataset exactly") {
    const auto bn = net8_fixture();
    const auto a = forward_sample(bn, 500, 77);
    const auto b = forward_sample(bn, 500, 77);
    CHECK(a.rows == b.rows);
    const auto c = forward_sample(bn, 500, 78);
    CHECK(a.rows != c.rows);
}

TEST_CASE("sampled joint matches the enumerated joint within four sigma per cell") {
    const auto bn = collider3_fixture();
    const std::size_t n = 50000;
    const auto ds = forward_sample(bn, n, 13);

    // Analytic joint by enumeration over all configurations.
    std::map<std::array<std::int32_t, 3>, double> joint;
    for (std::int32_t a = 0; a < 2; ++a) {
        for (std::int32_t b = 0; b < 2; ++b) {
            for (std::int32_t c = 0; c < 2; ++c) {
                const double pa = bn.nodes[0].cpt(0, a);
                const double pb = bn.nodes[1].cpt(0, b);
                const double pc = bn.nodes[2].cpt(static_cast<std::size_t>(a * 2 + b), c);
                joint[{a, b, c}] = pa * pb * pc;
            }
        }
    }

    std::map<std::array<std::int32_t, 3>, std::size_t> counts;
    for (std::size_t r = 0; r < n; ++r) {
        counts[{ds.code(r, 0), ds.code(r, 1), ds.code(r, 2)}]++;
    }
    for (const auto& [config, p] : joint) {
        const double observed = static_cast<double>(counts[config]) / n;
        const double sigma = std::sqrt(p * (1.0 - p) / n);
        CHECK(std::abs(observed - p) <= 4.0 * sigma);
    }
}

namespace {

/// Empirical conditional mutual information I(A; C | B) in nats from raw
/// codes, all binary.
double empirical_cmi(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b,
                     const std::vector<std::int32_t>& c) {
    const std::size_t n = a.size();
    double counts[2][2][2] = {};
    for (std::size_t r = 0; r < n; ++r) counts[a[r]][b[r]][c[r]] += 1.0;
    double cmi = 0.0;
    for (int vb = 0; vb < 2; ++vb) {
        double nb = 0.0, na[2] = {}, nc[2] = {};
        for (int va = 0; va < 2; ++va) {
            for (int vc = 0; vc < 2; ++vc) {
                nb += counts[va][vb][vc];
                na[va] += counts[va][vb][vc];
                nc[vc] += counts[va][vb][vc];
            }
        }
        if (nb == 0.0) continue;
        for (int va = 0; va < 2; ++va) {
            for (int vc = 0; vc < 2; ++vc) {
                const double nabc = counts[va][vb][vc];
                if (nabc == 0.0) continue;
                cmi += (nabc / n) * std::log(nabc * nb / (na[va] * nc[vc]));
            }
        }
    }
    return cmi;
}

} // namespace

TEST_CASE("chain samples respect d-separation of the endpoints given the middle") {
    const auto bn = chain3_fixture();
    const std::size_t n = 50000;
    const auto ds = forward_sample(bn, n, 21);

    std::vector<std::int32_t> a(n), b(n), c(n);
    for (std::size_t r = 0; r < n; ++r) {
        a[r] = ds.code(r, 0);
        b[r] = ds.code(r, 1);
        c[r] = ds.code(r, 2);
    }
    const double observed = empirical_cmi(a, b, c);

    // Noise floor from permuting C within each B stratum, which enforces
    // the conditional independence while keeping all marginals.
    Rng rng(4);
    double floor = 0.0;
    for (int perm = 0; perm < 10; ++perm) {
        std::vector<std::int32_t> cp = c;
        for (int vb = 0; vb < 2; ++vb) {
            std::vector<std::size_t> idx;
            for (std::size_t r = 0; r < n; ++r) {
                if (b[r] == vb) idx.push_back(r);
            }
            auto shuffled = idx;
            rng.shuffle(shuffled);
            std::vector<std::int32_t> values(idx.size());
            for (std::size_t k = 0; k < idx.size(); ++k) values[k] = c[shuffled[k]];
            for (std::size_t k = 0; k < idx.size(); ++k) cp[idx[k]] = values[k];
        }
        floor = std::max(floor, empirical_cmi(a, b, cp));
    }
    CHECK(observed <= 4.0 * floor + 1e-6);

    // The unconditional dependence is far above that floor, so the bound
    // is informative.
    std::vector<std::int32_t> zeros(n, 0);
    double marginal_mi = empirical_cmi(a, zeros, c);
    CHECK(marginal_mi > 100.0 * (4.0 * floor + 1e-6));
}

TEST_CASE("bundled fixtures are valid and sized as advertised") {
    for (const auto& bn : {chain3_fixture(), collider3_fixture(), net8_fixture(),
                           net15_fixture(), net50_fixture()}) {
        CHECK(validate(bn).empty());
    }
    CHECK(net8_fixture().node_count() == 8);
    CHECK(net15_fixture().node_count() == 15);
    const auto big = net50_fixture();
    CHECK(big.node_count() == 50);
    for (const auto& node : big.nodes) CHECK(node.card == 3);
    CHECK(!big.dag().edges.empty());
}
