#pragma once

// Constructed single-fault instances for fault-localization checks.

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ragmut/execution.hpp"

namespace ragmut::testgen {

inline TestOutcomeVector outcomes(const std::string& id, const std::string& bits) {
    TestOutcomeVector v;
    v.program_id = id;
    for (std::size_t i = 0; i < bits.size(); ++i) v.passed["t" + std::to_string(i)] = bits[i] == 'P';
    return v;
}

// One faulty statement among `n_statements`; its mutants flip failing
// tests to pass, every other mutant only breaks passing tests or nothing.
struct SingleFault {
    TestOutcomeVector original;
    std::vector<TestOutcomeVector> mutants;
    std::map<std::string, int> statement_of;
    std::set<int> statements;
    int faulty = 0;
};

inline SingleFault make_single_fault(std::mt19937& rng) {
    SingleFault f;
    const int n_tests = std::uniform_int_distribution<int>(2, 10)(rng);
    const int n_fail = std::uniform_int_distribution<int>(1, n_tests - 1)(rng);
    std::string orig(static_cast<std::size_t>(n_tests), 'P');
    for (int i = 0; i < n_fail; ++i) orig[static_cast<std::size_t>(i)] = 'F';
    f.original = outcomes("orig", orig);
    const int n_stmt = std::uniform_int_distribution<int>(2, 12)(rng);
    for (int s = 1; s <= n_stmt; ++s) f.statements.insert(s);
    f.faulty = std::uniform_int_distribution<int>(1, n_stmt)(rng);
    int id = 0;
    for (int s = 1; s <= n_stmt; ++s) {
        const int k = std::uniform_int_distribution<int>(s == f.faulty ? 1 : 0, 3)(rng);
        for (int j = 0; j < k; ++j) {
            std::string bits = orig;
            if (s == f.faulty) {
                // Flip at least one failing test, never a passing one.
                bits[static_cast<std::size_t>(std::uniform_int_distribution<int>(0, n_fail - 1)(rng))] = 'P';
                for (int t = 0; t < n_fail; ++t)
                    if (rng() % 2) bits[static_cast<std::size_t>(t)] = 'P';
            } else {
                for (int t = n_fail; t < n_tests; ++t)
                    if (rng() % 2) bits[static_cast<std::size_t>(t)] = 'F';
            }
            const auto mid = "m" + std::to_string(id++);
            f.mutants.push_back(outcomes(mid, bits));
            f.statement_of[mid] = s;
        }
    }
    return f;
}

} // namespace ragmut::testgen
