#include <iostream>
#include <string>
#include <vector>

#include "kms/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    auto res = kms::cli::run(args);
    std::cout << res.out;
    return res.exit_code;
}
