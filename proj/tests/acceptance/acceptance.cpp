// Runs the verification suite; optional arguments restrict it to the given
// criterion ids. Exit status 1 if any criterion fails.

#include "gwlab/acceptance.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>

int main(int argc, char** argv) {
    gwlab::AcceptanceOptions opts;
    for (int k = 1; k < argc; ++k) {
        char* end = nullptr;
        const long id = std::strtol(argv[k], &end, 10);
        if (*end != '\0' || id < 1 || id > gwlab::acceptance_criteria) {
            std::fprintf(stderr, "usage: acceptance [criterion id ...]\n");
            return 2;
        }
        opts.only.push_back(static_cast<int>(id));
    }
    int failed = 0;
    const auto results = gwlab::run_acceptance(opts, [&](const gwlab::CriterionResult& r) {
        std::printf("%s\n", gwlab::summary_line(r).c_str());
        std::fflush(stdout);
        failed += r.passed ? 0 : 1;
    });
    std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
    return failed == 0 ? 0 : 1;
}
