// Regenerates the bundled network fixtures under data/fixtures/.
#include <filesystem>
#include <iostream>

#include "pagrefine/bayesnet.hpp"
#include "pagrefine/io.hpp"

int main(int argc, char** argv) {
    const std::string dir = argc > 1 ? argv[1] : "data/fixtures";
    std::filesystem::create_directories(dir);
    using namespace pagrefine;
    save_bayesnet_json(chain3_fixture(), dir + "/chain3.json");
    save_bayesnet_json(collider3_fixture(), dir + "/collider3.json");
    save_bayesnet_json(net8_fixture(), dir + "/net8.json");
    save_bayesnet_json(net15_fixture(), dir + "/net15.json");
    save_bayesnet_json(net50_fixture(), dir + "/net50.json");
    std::cout << "fixtures written to " << dir << '\n';
    return 0;
}
