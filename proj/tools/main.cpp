#include <string>
#include <vector>

#include "curv/cli.hpp"

int main(int argc, char** argv) {
    return curv::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
