#pragma once

// Brute-force oracles for the guessing micro-domain: optimal worst-case
// turn counts by game-tree search, an enumerated bisection profile, the
// exact feedback posterior, and the reachable (state, guess) set.

#include <array>
#include <map>
#include <set>
#include <vector>

#include "didact/lab.hpp"

namespace didact::testsupport {

// Minimal worst-case number of guesses to identify any target in an
// interval of the given size when each guess earns CORRECT/HIGHER/LOWER.
inline int optimal_worst_case(int size) {
    if (size <= 0) {
        return 0;
    }
    if (size == 1) {
        return 1;
    }
    int best = size; // linear scan upper bound
    for (int split = 0; split < size; ++split) {
        const int below = split;
        const int above = size - 1 - split;
        const int worst = 1 + std::max(optimal_worst_case(below), optimal_worst_case(above));
        best = std::min(best, worst);
    }
    return best;
}

// Floor-midpoint bisection simulated directly (no lab code): number of
// targets solved at each turn for answer space n.
inline std::vector<int> bisection_profile(int n) {
    std::vector<int> solved_at(static_cast<size_t>(n) + 1, 0);
    for (int target = 0; target < n; ++target) {
        int lo = 0;
        int hi = n - 1;
        int turn = 0;
        while (true) {
            ++turn;
            const int guess = lo + (hi - lo) / 2;
            if (guess == target) {
                ++solved_at[static_cast<size_t>(turn)];
                break;
            }
            if (target > guess) {
                lo = guess + 1;
            } else {
                hi = guess - 1;
            }
        }
    }
    return solved_at;
}

// Exact posterior over feedback tokens at (state, guess) when the target
// is uniform over [lo, hi]: (P(CORRECT), P(HIGHER), P(LOWER)).
inline std::array<double, 3> feedback_posterior(const lab::IntervalState& s, int guess) {
    const int size = s.hi - s.lo + 1;
    int correct = 0;
    int higher = 0;
    int lower = 0;
    for (int y = s.lo; y <= s.hi; ++y) {
        if (y == guess) {
            ++correct;
        } else if (y > guess) {
            ++higher;
        } else {
            ++lower;
        }
    }
    return {static_cast<double>(correct) / size, static_cast<double>(higher) / size,
            static_cast<double>(lower) / size};
}

// (state index, guess) pairs reachable by an in-interval guessing policy
// within max_turns turns, truthful feedback.
inline std::set<std::pair<int, int>> reachable_cells(int n, int max_turns) {
    std::set<std::pair<int, int>> cells;
    std::set<int> frontier{lab::interval_index(lab::IntervalState{0, n - 1}, n)};
    for (int turn = 1; turn <= max_turns && !frontier.empty(); ++turn) {
        std::set<int> next;
        for (int state_index : frontier) {
            const lab::IntervalState s = lab::interval_from_index(state_index, n);
            for (int g = s.lo; g <= s.hi; ++g) {
                cells.insert({state_index, g});
                if (g < s.hi) { // HIGHER possible: target in [g+1, hi]
                    next.insert(lab::interval_index(lab::IntervalState{g + 1, s.hi}, n));
                }
                if (g > s.lo) { // LOWER possible: target in [lo, g-1]
                    next.insert(lab::interval_index(lab::IntervalState{s.lo, g - 1}, n));
                }
            }
        }
        frontier = std::move(next);
    }
    return cells;
}

// Theta that plays floor-midpoint bisection to numerical certainty.
inline lab::Theta bisection_theta(int n) {
    lab::Theta theta = lab::Theta::zeros(n);
    for (int index = 0; index < lab::interval_state_count(n); ++index) {
        const lab::IntervalState s = lab::interval_from_index(index, n);
        const int mid = s.lo + (s.hi - s.lo) / 2;
        theta.row(index)[mid] = 100.0;
    }
    return theta;
}

} // namespace didact::testsupport
