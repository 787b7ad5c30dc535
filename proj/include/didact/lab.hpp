#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "didact/metrics.hpp"
#include "didact/util.hpp"

namespace didact::lab {

// Number-guessing micro-domain: the target y is drawn uniformly from
// 0..N-1 each episode; feedback is CORRECT / HIGHER / LOWER.
struct ToyConfig {
    int answer_count = 16; // N >= 2
    int max_turns = 6;
    uint64_t seed = 0;
};

enum class Feedback { Correct, Higher, Lower };

const char* to_string(Feedback feedback);

// Deterministic featurization of the dialogue history: the candidate
// interval [lo, hi].
struct IntervalState {
    int lo = 0;
    int hi = 0;
};

int interval_state_count(int n); // n*(n+1)/2
int interval_index(const IntervalState& state, int n);
IntervalState interval_from_index(int index, int n);

// CORRECT iff guess == target, HIGHER iff target > guess, LOWER otherwise.
Feedback toy_teacher_feedback(int target, int guess, int n);

struct GuessFeedback {
    int guess;
    Feedback feedback;
};

// Fold: start (0, N-1); HIGHER at g sets lo = g+1, LOWER sets hi = g-1.
// An emptied interval resets to (0, N-1) and counts as an anomaly.
IntervalState featurize(const std::vector<GuessFeedback>& history, int n);

// Element-wise feedback application used by featurize and the episode loop.
void apply_feedback(IntervalState& state, int guess, Feedback feedback, int n);

size_t featurize_anomaly_count();

// Tabular softmax policy over interval states.
struct Theta {
    int n = 0;
    std::vector<double> logits; // interval_state_count(n) * n

    static Theta zeros(int n);
    double* row(int state_index) { return logits.data() + static_cast<size_t>(state_index) * n; }
    const double* row(int state_index) const {
        return logits.data() + static_cast<size_t>(state_index) * n;
    }
};

// Feedback predictor: per (interval state, guess), a softmax over the
// three feedback tokens. The target never enters.
struct Phi {
    int n = 0;
    std::vector<double> logits; // interval_state_count(n) * n * 3

    static Phi zeros(int n);
    double* cell(int state_index, int guess) {
        return logits.data() + (static_cast<size_t>(state_index) * n + guess) * 3;
    }
    const double* cell(int state_index, int guess) const {
        return logits.data() + (static_cast<size_t>(state_index) * n + guess) * 3;
    }
};

struct ActionSample {
    int action = 0;
    double log_prob = 0.0;
};

// Softmax sample (argmax when greedy; ties to the lowest index) with the
// exact log-probability of the chosen action.
ActionSample policy_action(const Theta& theta, const IntervalState& state, Rng& rng,
                           bool greedy = false);

std::vector<double> softmax_row(const double* logits, int count);

enum class ToyMode { Didactic, SingleTurn, Autodidact };

struct ToyStep {
    int state_index = 0;
    int guess = 0;
    Feedback feedback = Feedback::Correct;
    bool has_feedback = false;
};

struct ToyEpisode {
    int target = 0;
    int reward = 0;      // 1 iff some guess equals the target in budget
    int solved_turn = 0; // 0 when unsolved
    std::vector<ToyStep> steps;
};

// Didactic: truthful feedback every turn. SingleTurn: one guess, the
// feedback channel is never invoked. Autodidact: feedback sampled from
// phi's predictive distribution; the target is used only for reward.
ToyEpisode run_toy_episode(const Theta& theta, const ToyConfig& config, ToyMode mode, Rng& rng,
                           const Phi* phi = nullptr);
ToyEpisode run_toy_episode_with_target(const Theta& theta, const ToyConfig& config, ToyMode mode,
                                       int target, Rng& rng, const Phi* phi = nullptr);

enum class BaselineKind { None, BatchMean };

// REINFORCE direction: mean over episodes of
// (reward - baseline) * sum over steps of (onehot(action) - softmax(state)).
std::vector<double> reinforce_gradient(const Theta& theta, const std::vector<ToyEpisode>& batch,
                                       BaselineKind baseline);

// Surrogate whose gradient in theta is reinforce_gradient (baseline held
// constant): mean over episodes of (reward - baseline) * sum log pi(a|s).
double reinforce_objective(const Theta& theta, const std::vector<ToyEpisode>& batch,
                           double baseline_value);

double batch_mean_reward(const std::vector<ToyEpisode>& batch);

// theta += lr * gradient. Throws on a non-finite gradient.
void reinforce_update(Theta& theta, const std::vector<ToyEpisode>& batch, double learning_rate,
                      BaselineKind baseline);

// Mean over observed feedback tokens of grad log p(feedback | state, guess).
std::vector<double> worldmodel_gradient(const Phi& phi, const std::vector<ToyEpisode>& batch);

double worldmodel_log_likelihood(const Phi& phi, const std::vector<ToyEpisode>& batch);

// Cross-entropy ascent step; throws on a non-finite gradient.
void worldmodel_update(Phi& phi, const std::vector<ToyEpisode>& batch, double learning_rate);

enum class TrainRegime { RL2F, SingleTurnRL };

struct TrainOptions {
    int batch_size = 64;
    BaselineKind baseline = BaselineKind::BatchMean;
    long curve_block = 10000; // learning-curve granularity in episodes
};

struct TrainResult {
    Theta theta;
    std::vector<double> curve; // mean reward per curve_block episodes
};

// RL2F trains on didactic multi-turn episodes; SingleTurnRL with
// max_turns = 1. The curve has ceil(episodes / curve_block) entries.
TrainResult train(const ToyConfig& config, TrainRegime regime, long episodes,
                  double learning_rate, uint64_t seed, const TrainOptions& options = {});

// Didactic episode from a uniform-in-interval behavior policy; keeps the
// interval state an exact sufficient statistic of the feedback posterior.
ToyEpisode sample_worldmodel_episode(const ToyConfig& config, Rng& rng);

Phi train_worldmodel(const ToyConfig& config, long episodes, double learning_rate, uint64_t seed,
                     int batch_size = 256);

// Monte-Carlo cumulative accuracy per turn.
CumulativeAccuracyCurve evaluate(const Theta& theta, ToyMode mode, const ToyConfig& config,
                                 long episodes, uint64_t seed, const Phi* phi = nullptr);

// Same theta, but the first sampled guess is repeated on every turn: the
// flat curve of a student with no in-context plasticity.
CumulativeAccuracyCurve evaluate_repeat_baseline(const Theta& theta, const ToyConfig& config,
                                                 long episodes, uint64_t seed);

struct GradCheckResult {
    double theta_max_rel_error = 0.0;
    double phi_max_rel_error = 0.0;
};

// Central finite differences (eps 1e-5) against the analytic gradients on
// random instances; returns the max relative error seen for each.
GradCheckResult gradient_check(int instances, uint64_t seed);

struct SignTest {
    int wins = 0;
    int losses = 0;
    int ties = 0;
    double p_value = 1.0; // one-sided exact binomial, ties dropped
};

SignTest sign_test(const std::vector<double>& a, const std::vector<double>& b);

double binomial_tail_p(int successes, int trials); // P(Bin(n, 1/2) >= k)

// The desk-scale ordering experiment: per seed, train theta under RL2F and
// under single-turn RL, evaluate both in didactic multi-turn mode, train a
// phi and evaluate the RL2F theta in autodidact mode against the repeat
// baseline. Sign tests are taken at the final turn.
struct OrderingStudy {
    std::vector<CumulativeAccuracyCurve> rl2f_curves;
    std::vector<CumulativeAccuracyCurve> single_curves;
    std::vector<CumulativeAccuracyCurve> autodidact_curves;
    std::vector<CumulativeAccuracyCurve> repeat_curves;
    std::vector<double> mean_rl2f;
    std::vector<double> mean_single;
    SignTest final_turn_test;      // RL2F > single-turn at max_turns, strict
    int autodidact_successes = 0;  // autodidact >= repeat at max_turns (ties count)
    double autodidact_p_value = 1.0;
    bool ordering_holds = false;
};

using ProgressFn = std::function<void(const std::string&)>;

OrderingStudy run_ordering_study(const ToyConfig& config, long train_episodes, int seeds,
                                 double learning_rate, long eval_episodes, uint64_t base_seed,
                                 const ProgressFn& progress = {});

void save_theta(const Theta& theta, const std::string& path);
Theta load_theta(const std::string& path);
void save_phi(const Phi& phi, const std::string& path);
Phi load_phi(const std::string& path);

} // namespace didact::lab
