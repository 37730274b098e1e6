// Acceptance runner: executes every criterion and prints one PASS/FAIL line
// each. Exit code 0 iff all criteria pass. Seed and worker count come from
// the environment (ACCEPTANCE_SEED, BARYTRANS_THREADS).

#include <cstdio>
#include <cstdlib>
#include <thread>

#include "barytrans/acceptance.hpp"

int main() {
    std::uint64_t seed = 1;
    if (const char* env = std::getenv("ACCEPTANCE_SEED")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) seed = static_cast<std::uint64_t>(v);
    }
    unsigned threads = std::min(4u, std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("BARYTRANS_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) threads = static_cast<unsigned>(v);
    }

    const auto results = barytrans::run_acceptance_suite(seed, static_cast<int>(threads));
    bool all = true;
    for (const auto& r : results) {
        std::printf("%s  criterion %2d  %-45s %7.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.id,
                    r.name.c_str(), r.seconds, r.detail.c_str());
        all = all && r.passed;
    }
    std::printf("%s\n", all ? "ACCEPTANCE: all criteria passed" : "ACCEPTANCE: FAILURES present");
    return all ? 0 : 1;
}
