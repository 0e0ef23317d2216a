// Prints one line per acceptance criterion; exits nonzero if any fails.
#include <cstdlib>
#include <iostream>
#include <string>

#include "qhydro/acceptance.hpp"

int main(int argc, char** argv) {
    qhydro::AcceptanceOptions opt;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--cache" && i + 1 < argc) opt.eos_cache_dir = argv[++i];
        else if (a == "--seed" && i + 1 < argc) opt.seed = std::strtoull(argv[++i], nullptr, 10);
        else if (a == "--threads" && i + 1 < argc) opt.threads = std::atoi(argv[++i]);
        else {
            std::cerr << "usage: acceptance [--cache DIR] [--seed N] [--threads N]\n";
            return 2;
        }
    }
    bool ok = true;
    qhydro::run_acceptance(opt, [&](const qhydro::CriterionResult& r) {
        std::cout << r.line() << std::endl;
        ok = ok && r.passed && !r.skipped;
    });
    std::cout << (ok ? "all criteria passed" : "some criteria FAILED") << std::endl;
    return ok ? 0 : 1;
}
