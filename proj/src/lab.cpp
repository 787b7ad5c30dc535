#include "didact/lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace didact::lab {

namespace {

std::atomic<size_t> g_anomalies{0};

void note_anomaly() {
    if (g_anomalies.fetch_add(1) == 0) {
        log_warn("featurize: contradictory feedback emptied the interval; reset to full range");
    }
}

void check_config(const ToyConfig& config) {
    if (config.answer_count < 2) {
        throw std::invalid_argument("toy config: answer_count must be >= 2");
    }
    if (config.max_turns < 1) {
        throw std::invalid_argument("toy config: max_turns must be >= 1");
    }
}

int sample_from(const std::vector<double>& probs, Rng& rng) {
    const double u = rng.uniform01();
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) {
            return static_cast<int>(i);
        }
    }
    return static_cast<int>(probs.size()) - 1;
}

Feedback sample_phi_feedback(const Phi& phi, int state_index, int guess, Rng& rng) {
    const auto probs = softmax_row(phi.cell(state_index, guess), 3);
    return static_cast<Feedback>(sample_from(probs, rng));
}

void check_finite(const std::vector<double>& values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw std::runtime_error(std::string(what) + ": non-finite gradient component");
        }
    }
}

} // namespace

const char* to_string(Feedback feedback) {
    switch (feedback) {
    case Feedback::Correct: return "CORRECT";
    case Feedback::Higher: return "HIGHER";
    case Feedback::Lower: return "LOWER";
    }
    return "?";
}

int interval_state_count(int n) { return n * (n + 1) / 2; }

int interval_index(const IntervalState& state, int n) {
    if (state.lo < 0 || state.hi >= n || state.lo > state.hi) {
        throw std::invalid_argument("interval_index: invalid state");
    }
    return state.lo * n - state.lo * (state.lo - 1) / 2 + (state.hi - state.lo);
}

IntervalState interval_from_index(int index, int n) {
    for (int lo = 0; lo < n; ++lo) {
        const int row = n - lo;
        if (index < row) {
            return IntervalState{lo, lo + index};
        }
        index -= row;
    }
    throw std::invalid_argument("interval_from_index: index out of range");
}

Feedback toy_teacher_feedback(int target, int guess, int n) {
    if (target < 0 || target >= n || guess < 0 || guess >= n) {
        throw std::invalid_argument("toy_teacher_feedback: value out of range");
    }
    if (guess == target) {
        return Feedback::Correct;
    }
    return target > guess ? Feedback::Higher : Feedback::Lower;
}

void apply_feedback(IntervalState& state, int guess, Feedback feedback, int n) {
    if (feedback == Feedback::Higher) {
        state.lo = guess + 1;
    } else if (feedback == Feedback::Lower) {
        state.hi = guess - 1;
    }
    if (state.lo > state.hi || state.lo < 0 || state.hi >= n) {
        note_anomaly();
        state = IntervalState{0, n - 1};
    }
}

IntervalState featurize(const std::vector<GuessFeedback>& history, int n) {
    IntervalState state{0, n - 1};
    for (const auto& step : history) {
        apply_feedback(state, step.guess, step.feedback, n);
    }
    return state;
}

size_t featurize_anomaly_count() { return g_anomalies.load(); }

Theta Theta::zeros(int n) {
    Theta theta;
    theta.n = n;
    theta.logits.assign(static_cast<size_t>(interval_state_count(n)) * n, 0.0);
    return theta;
}

Phi Phi::zeros(int n) {
    Phi phi;
    phi.n = n;
    phi.logits.assign(static_cast<size_t>(interval_state_count(n)) * n * 3, 0.0);
    return phi;
}

std::vector<double> softmax_row(const double* logits, int count) {
    double mx = logits[0];
    for (int i = 1; i < count; ++i) {
        mx = std::max(mx, logits[i]);
    }
    std::vector<double> probs(static_cast<size_t>(count));
    double z = 0.0;
    for (int i = 0; i < count; ++i) {
        probs[static_cast<size_t>(i)] = std::exp(logits[i] - mx);
        z += probs[static_cast<size_t>(i)];
    }
    for (double& p : probs) {
        p /= z;
    }
    return probs;
}

ActionSample policy_action(const Theta& theta, const IntervalState& state, Rng& rng, bool greedy) {
    const int n = theta.n;
    const double* row = theta.row(interval_index(state, n));

    double mx = row[0];
    for (int a = 1; a < n; ++a) {
        mx = std::max(mx, row[a]);
    }
    double z = 0.0;
    for (int a = 0; a < n; ++a) {
        z += std::exp(row[a] - mx);
    }
    const double log_z = std::log(z);

    int action = 0;
    if (greedy) {
        for (int a = 1; a < n; ++a) {
            if (row[a] > row[action]) {
                action = a;
            }
        }
    } else {
        const double u = rng.uniform01() * z;
        double acc = 0.0;
        action = n - 1;
        for (int a = 0; a < n; ++a) {
            acc += std::exp(row[a] - mx);
            if (u < acc) {
                action = a;
                break;
            }
        }
    }
    return ActionSample{action, (row[action] - mx) - log_z};
}

ToyEpisode run_toy_episode_with_target(const Theta& theta, const ToyConfig& config, ToyMode mode,
                                       int target, Rng& rng, const Phi* phi) {
    check_config(config);
    const int n = config.answer_count;
    if (target < 0 || target >= n) {
        throw std::invalid_argument("run_toy_episode: target out of range");
    }
    if (mode == ToyMode::Autodidact && phi == nullptr) {
        throw std::invalid_argument("run_toy_episode: autodidact mode needs a phi");
    }
    const int turns = mode == ToyMode::SingleTurn ? 1 : config.max_turns;

    ToyEpisode episode;
    episode.target = target;
    IntervalState state{0, n - 1};
    for (int turn = 1; turn <= turns; ++turn) {
        ToyStep step;
        step.state_index = interval_index(state, n);
        step.guess = policy_action(theta, state, rng).action;
        const bool hit = step.guess == target;

        if (mode == ToyMode::Didactic) {
            step.feedback = toy_teacher_feedback(target, step.guess, n);
            step.has_feedback = true;
        } else if (mode == ToyMode::Autodidact && !hit && turn < turns) {
            step.feedback = sample_phi_feedback(*phi, step.state_index, step.guess, rng);
            step.has_feedback = true;
        }
        episode.steps.push_back(step);

        if (hit) {
            episode.reward = 1;
            episode.solved_turn = turn;
            break;
        }
        if (step.has_feedback) {
            apply_feedback(state, step.guess, step.feedback, n);
        }
    }
    return episode;
}

ToyEpisode run_toy_episode(const Theta& theta, const ToyConfig& config, ToyMode mode, Rng& rng,
                           const Phi* phi) {
    check_config(config);
    const int target = static_cast<int>(rng.below(static_cast<uint64_t>(config.answer_count)));
    return run_toy_episode_with_target(theta, config, mode, target, rng, phi);
}

double batch_mean_reward(const std::vector<ToyEpisode>& batch) {
    if (batch.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (const auto& episode : batch) {
        total += episode.reward;
    }
    return total / static_cast<double>(batch.size());
}

std::vector<double> reinforce_gradient(const Theta& theta, const std::vector<ToyEpisode>& batch,
                                       BaselineKind baseline) {
    if (batch.empty()) {
        throw std::invalid_argument("reinforce_gradient: batch must be non-empty");
    }
    const int n = theta.n;
    const double b = baseline == BaselineKind::BatchMean ? batch_mean_reward(batch) : 0.0;
    std::vector<double> gradient(theta.logits.size(), 0.0);

    for (const auto& episode : batch) {
        const double weight = episode.reward - b;
        if (weight == 0.0) {
            continue;
        }
        for (const auto& step : episode.steps) {
            const double* row = theta.row(step.state_index);
            double mx = row[0];
            for (int a = 1; a < n; ++a) {
                mx = std::max(mx, row[a]);
            }
            double z = 0.0;
            for (int a = 0; a < n; ++a) {
                z += std::exp(row[a] - mx);
            }
            double* grad_row = gradient.data() + static_cast<size_t>(step.state_index) * n;
            for (int a = 0; a < n; ++a) {
                const double p = std::exp(row[a] - mx) / z;
                grad_row[a] += weight * ((a == step.guess ? 1.0 : 0.0) - p);
            }
        }
    }
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (double& g : gradient) {
        g *= scale;
    }
    return gradient;
}

double reinforce_objective(const Theta& theta, const std::vector<ToyEpisode>& batch,
                           double baseline_value) {
    if (batch.empty()) {
        throw std::invalid_argument("reinforce_objective: batch must be non-empty");
    }
    const int n = theta.n;
    double total = 0.0;
    for (const auto& episode : batch) {
        const double weight = episode.reward - baseline_value;
        if (weight == 0.0) {
            continue;
        }
        double log_prob_sum = 0.0;
        for (const auto& step : episode.steps) {
            const double* row = theta.row(step.state_index);
            double mx = row[0];
            for (int a = 1; a < n; ++a) {
                mx = std::max(mx, row[a]);
            }
            double z = 0.0;
            for (int a = 0; a < n; ++a) {
                z += std::exp(row[a] - mx);
            }
            log_prob_sum += (row[step.guess] - mx) - std::log(z);
        }
        total += weight * log_prob_sum;
    }
    return total / static_cast<double>(batch.size());
}

void reinforce_update(Theta& theta, const std::vector<ToyEpisode>& batch, double learning_rate,
                      BaselineKind baseline) {
    const auto gradient = reinforce_gradient(theta, batch, baseline);
    check_finite(gradient, "reinforce_update");
    for (size_t i = 0; i < gradient.size(); ++i) {
        theta.logits[i] += learning_rate * gradient[i];
    }
}

std::vector<double> worldmodel_gradient(const Phi& phi, const std::vector<ToyEpisode>& batch) {
    std::vector<double> gradient(phi.logits.size(), 0.0);
    size_t observed = 0;
    for (const auto& episode : batch) {
        for (const auto& step : episode.steps) {
            if (!step.has_feedback) {
                continue;
            }
            ++observed;
            const double* cell = phi.cell(step.state_index, step.guess);
            const auto probs = softmax_row(cell, 3);
            double* grad_cell = gradient.data() +
                                (static_cast<size_t>(step.state_index) * phi.n + step.guess) * 3;
            for (int k = 0; k < 3; ++k) {
                const double target = k == static_cast<int>(step.feedback) ? 1.0 : 0.0;
                grad_cell[k] += target - probs[static_cast<size_t>(k)];
            }
        }
    }
    if (observed == 0) {
        throw std::invalid_argument("worldmodel_gradient: batch holds no feedback observations");
    }
    const double scale = 1.0 / static_cast<double>(observed);
    for (double& g : gradient) {
        g *= scale;
    }
    return gradient;
}

double worldmodel_log_likelihood(const Phi& phi, const std::vector<ToyEpisode>& batch) {
    double total = 0.0;
    size_t observed = 0;
    for (const auto& episode : batch) {
        for (const auto& step : episode.steps) {
            if (!step.has_feedback) {
                continue;
            }
            ++observed;
            const auto probs = softmax_row(phi.cell(step.state_index, step.guess), 3);
            total += std::log(probs[static_cast<size_t>(step.feedback)]);
        }
    }
    if (observed == 0) {
        throw std::invalid_argument("worldmodel_log_likelihood: batch holds no feedback observations");
    }
    return total / static_cast<double>(observed);
}

void worldmodel_update(Phi& phi, const std::vector<ToyEpisode>& batch, double learning_rate) {
    const auto gradient = worldmodel_gradient(phi, batch);
    check_finite(gradient, "worldmodel_update");
    for (size_t i = 0; i < gradient.size(); ++i) {
        phi.logits[i] += learning_rate * gradient[i];
    }
}

TrainResult train(const ToyConfig& config, TrainRegime regime, long episodes, double learning_rate,
                  uint64_t seed, const TrainOptions& options) {
    check_config(config);
    if (episodes < 1) {
        throw std::invalid_argument("train: episodes must be >= 1");
    }
    ToyConfig effective = config;
    ToyMode mode = ToyMode::Didactic;
    if (regime == TrainRegime::SingleTurnRL) {
        effective.max_turns = 1;
        mode = ToyMode::SingleTurn;
    }

    TrainResult result;
    result.theta = Theta::zeros(effective.answer_count);
    Rng rng(seed);

    std::vector<ToyEpisode> batch;
    batch.reserve(static_cast<size_t>(options.batch_size));
    double block_reward = 0.0;
    long block_count = 0;

    for (long i = 0; i < episodes; ++i) {
        batch.push_back(run_toy_episode(result.theta, effective, mode, rng));
        block_reward += batch.back().reward;
        ++block_count;
        if (static_cast<int>(batch.size()) == options.batch_size || i + 1 == episodes) {
            reinforce_update(result.theta, batch, learning_rate, options.baseline);
            batch.clear();
        }
        if (block_count == options.curve_block || i + 1 == episodes) {
            result.curve.push_back(block_reward / static_cast<double>(block_count));
            block_reward = 0.0;
            block_count = 0;
        }
    }
    return result;
}

ToyEpisode sample_worldmodel_episode(const ToyConfig& config, Rng& rng) {
    check_config(config);
    const int n = config.answer_count;
    const int target = static_cast<int>(rng.below(static_cast<uint64_t>(n)));

    ToyEpisode episode;
    episode.target = target;
    IntervalState state{0, n - 1};
    for (int turn = 1; turn <= config.max_turns; ++turn) {
        ToyStep step;
        step.state_index = interval_index(state, n);
        step.guess = state.lo + static_cast<int>(rng.below(static_cast<uint64_t>(state.hi - state.lo + 1)));
        step.feedback = toy_teacher_feedback(target, step.guess, n);
        step.has_feedback = true;
        episode.steps.push_back(step);
        if (step.guess == target) {
            episode.reward = 1;
            episode.solved_turn = turn;
            break;
        }
        apply_feedback(state, step.guess, step.feedback, n);
    }
    return episode;
}

Phi train_worldmodel(const ToyConfig& config, long episodes, double learning_rate, uint64_t seed,
                     int batch_size) {
    check_config(config);
    if (episodes < 1 || batch_size < 1) {
        throw std::invalid_argument("train_worldmodel: episodes and batch_size must be >= 1");
    }
    Phi phi = Phi::zeros(config.answer_count);
    Rng rng(seed);
    std::vector<ToyEpisode> batch;
    batch.reserve(static_cast<size_t>(batch_size));
    const long total_batches = (episodes + batch_size - 1) / batch_size;
    long batch_index = 0;
    for (long i = 0; i < episodes; ++i) {
        batch.push_back(sample_worldmodel_episode(config, rng));
        if (static_cast<int>(batch.size()) == batch_size || i + 1 == episodes) {
            // Linear decay to a tenth of the initial rate: large early steps
            // drive the rare-cell logits, the late small ones cut jitter.
            const double decayed =
                learning_rate *
                (1.0 - 0.9 * static_cast<double>(batch_index) / static_cast<double>(total_batches));
            worldmodel_update(phi, batch, decayed);
            batch.clear();
            ++batch_index;
        }
    }
    return phi;
}

CumulativeAccuracyCurve evaluate(const Theta& theta, ToyMode mode, const ToyConfig& config,
                                 long episodes, uint64_t seed, const Phi* phi) {
    check_config(config);
    if (episodes < 1) {
        throw std::invalid_argument("evaluate: episodes must be >= 1");
    }
    const int turns = mode == ToyMode::SingleTurn ? 1 : config.max_turns;
    std::vector<size_t> solved_at(static_cast<size_t>(turns) + 1, 0);
    Rng rng(seed);
    for (long i = 0; i < episodes; ++i) {
        const ToyEpisode episode = run_toy_episode(theta, config, mode, rng, phi);
        if (episode.reward == 1) {
            ++solved_at[static_cast<size_t>(episode.solved_turn)];
        }
    }
    CumulativeAccuracyCurve curve;
    curve.denominator = static_cast<size_t>(episodes);
    size_t cumulative = 0;
    for (int t = 1; t <= turns; ++t) {
        cumulative += solved_at[static_cast<size_t>(t)];
        curve.values.push_back(static_cast<double>(cumulative) / static_cast<double>(episodes));
    }
    return curve;
}

CumulativeAccuracyCurve evaluate_repeat_baseline(const Theta& theta, const ToyConfig& config,
                                                 long episodes, uint64_t seed) {
    check_config(config);
    if (episodes < 1) {
        throw std::invalid_argument("evaluate: episodes must be >= 1");
    }
    std::vector<size_t> solved_at(static_cast<size_t>(config.max_turns) + 1, 0);
    Rng rng(seed);
    const IntervalState start{0, config.answer_count - 1};
    for (long i = 0; i < episodes; ++i) {
        const int target = static_cast<int>(rng.below(static_cast<uint64_t>(config.answer_count)));
        const int guess = policy_action(theta, start, rng).action;
        if (guess == target) {
            ++solved_at[1]; // repetition never solves after the first turn
        }
    }
    CumulativeAccuracyCurve curve;
    curve.denominator = static_cast<size_t>(episodes);
    size_t cumulative = 0;
    for (int t = 1; t <= config.max_turns; ++t) {
        cumulative += solved_at[static_cast<size_t>(t)];
        curve.values.push_back(static_cast<double>(cumulative) / static_cast<double>(episodes));
    }
    return curve;
}

GradCheckResult gradient_check(int instances, uint64_t seed) {
    if (instances < 1) {
        throw std::invalid_argument("gradient_check: instances must be >= 1");
    }
    constexpr double kEps = 1e-5;
    GradCheckResult result;
    Rng rng(seed);

    auto rel_error = [](double a, double b) {
        const double diff = std::fabs(a - b);
        if (diff <= 1e-7) {
            return 0.0; // below central-difference cancellation noise
        }
        return diff / std::max({std::fabs(a), std::fabs(b), 1e-8});
    };

    for (int i = 0; i < instances; ++i) {
        ToyConfig config;
        config.answer_count = 3 + static_cast<int>(rng.below(4)); // 3..6
        config.max_turns = 2 + static_cast<int>(rng.below(3));    // 2..4

        Theta theta = Theta::zeros(config.answer_count);
        for (double& logit : theta.logits) {
            logit = rng.uniform(-1.0, 1.0);
        }
        Phi phi = Phi::zeros(config.answer_count);
        for (double& logit : phi.logits) {
            logit = rng.uniform(-1.0, 1.0);
        }

        std::vector<ToyEpisode> batch;
        for (int e = 0; e < 8; ++e) {
            batch.push_back(run_toy_episode(theta, config, ToyMode::Didactic, rng));
        }

        const double baseline_value = batch_mean_reward(batch);
        const auto theta_grad = reinforce_gradient(theta, batch, BaselineKind::BatchMean);
        for (size_t j = 0; j < theta.logits.size(); ++j) {
            Theta probe = theta;
            probe.logits[j] += kEps;
            const double up = reinforce_objective(probe, batch, baseline_value);
            probe.logits[j] -= 2 * kEps;
            const double down = reinforce_objective(probe, batch, baseline_value);
            const double fd = (up - down) / (2 * kEps);
            result.theta_max_rel_error = std::max(result.theta_max_rel_error,
                                                  rel_error(theta_grad[j], fd));
        }

        const auto phi_grad = worldmodel_gradient(phi, batch);
        for (size_t j = 0; j < phi.logits.size(); ++j) {
            Phi probe = phi;
            probe.logits[j] += kEps;
            const double up = worldmodel_log_likelihood(probe, batch);
            probe.logits[j] -= 2 * kEps;
            const double down = worldmodel_log_likelihood(probe, batch);
            const double fd = (up - down) / (2 * kEps);
            result.phi_max_rel_error = std::max(result.phi_max_rel_error,
                                                rel_error(phi_grad[j], fd));
        }
    }
    return result;
}

double binomial_tail_p(int successes, int trials) {
    if (trials <= 0) {
        return 1.0;
    }
    double tail = 0.0;
    const double log_half = std::log(0.5);
    for (int k = successes; k <= trials; ++k) {
        const double log_choose =
            std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0);
        tail += std::exp(log_choose + trials * log_half);
    }
    return std::min(1.0, tail);
}

SignTest sign_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("sign_test: paired samples must have equal size");
    }
    SignTest test;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) {
            ++test.wins;
        } else if (a[i] < b[i]) {
            ++test.losses;
        } else {
            ++test.ties;
        }
    }
    test.p_value = binomial_tail_p(test.wins, test.wins + test.losses);
    return test;
}

OrderingStudy run_ordering_study(const ToyConfig& config, long train_episodes, int seeds,
                                 double learning_rate, long eval_episodes, uint64_t base_seed,
                                 const ProgressFn& progress) {
    check_config(config);
    if (seeds < 1) {
        throw std::invalid_argument("ordering study: seeds must be >= 1");
    }
    OrderingStudy study;
    const size_t turns = static_cast<size_t>(config.max_turns);
    study.mean_rl2f.assign(turns, 0.0);
    study.mean_single.assign(turns, 0.0);

    std::vector<double> rl2f_final;
    std::vector<double> single_final;
    int autodidact_successes = 0;

    for (int s = 0; s < seeds; ++s) {
        const uint64_t train_seed = derive_seed(base_seed, "train-" + std::to_string(s));
        const uint64_t eval_seed = derive_seed(base_seed, "eval-" + std::to_string(s));
        const uint64_t phi_seed = derive_seed(base_seed, "phi-" + std::to_string(s));

        const auto rl2f = train(config, TrainRegime::RL2F, train_episodes, learning_rate,
                                derive_seed(train_seed, "rl2f"));
        const auto single = train(config, TrainRegime::SingleTurnRL, train_episodes, learning_rate,
                                  derive_seed(train_seed, "single"));
        const Phi phi = train_worldmodel(config, train_episodes, 1.0, phi_seed);

        const auto rl2f_curve =
            evaluate(rl2f.theta, ToyMode::Didactic, config, eval_episodes, eval_seed);
        const auto single_curve =
            evaluate(single.theta, ToyMode::Didactic, config, eval_episodes, eval_seed);
        const auto auto_curve = evaluate(rl2f.theta, ToyMode::Autodidact, config, eval_episodes,
                                         derive_seed(eval_seed, "auto"), &phi);
        const auto repeat_curve = evaluate_repeat_baseline(rl2f.theta, config, eval_episodes,
                                                           derive_seed(eval_seed, "auto"));

        for (size_t t = 0; t < turns; ++t) {
            study.mean_rl2f[t] += rl2f_curve.values[t];
            study.mean_single[t] += single_curve.values[t];
        }
        rl2f_final.push_back(rl2f_curve.values.back());
        single_final.push_back(single_curve.values.back());
        if (auto_curve.values.back() >= repeat_curve.values.back()) {
            ++autodidact_successes;
        }

        if (progress) {
            progress("seed " + std::to_string(s + 1) + "/" + std::to_string(seeds) +
                     ": rl2f final " + std::to_string(rl2f_curve.values.back()) +
                     ", single final " + std::to_string(single_curve.values.back()) +
                     ", autodidact final " + std::to_string(auto_curve.values.back()) +
                     ", repeat " + std::to_string(repeat_curve.values.back()));
        }

        study.rl2f_curves.push_back(rl2f_curve);
        study.single_curves.push_back(single_curve);
        study.autodidact_curves.push_back(auto_curve);
        study.repeat_curves.push_back(repeat_curve);
    }

    for (size_t t = 0; t < turns; ++t) {
        study.mean_rl2f[t] /= seeds;
        study.mean_single[t] /= seeds;
    }
    study.final_turn_test = sign_test(rl2f_final, single_final);
    study.autodidact_successes = autodidact_successes;
    study.autodidact_p_value = binomial_tail_p(autodidact_successes, seeds);

    bool ordering = true;
    for (size_t t = 1; t < turns; ++t) { // turns >= 2
        if (study.mean_rl2f[t] < study.mean_single[t]) {
            ordering = false;
        }
    }
    study.ordering_holds = ordering && study.final_turn_test.wins > study.final_turn_test.losses &&
                           study.final_turn_test.p_value < 0.05 &&
                           study.autodidact_p_value < 0.05;
    return study;
}

namespace {

nlohmann::json logits_to_json(int n, const std::vector<double>& logits, const char* kind) {
    nlohmann::json j;
    j["kind"] = kind;
    j["answer_count"] = n;
    j["logits"] = logits;
    return j;
}

void load_logits(const std::string& path, const char* kind, int& n, std::vector<double>& logits) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    nlohmann::json j;
    in >> j;
    if (j.at("kind").get<std::string>() != kind) {
        throw std::runtime_error(path + ": expected kind '" + kind + "'");
    }
    n = j.at("answer_count").get<int>();
    if (n < 2) {
        throw std::runtime_error(path + ": answer_count must be >= 2");
    }
    logits = j.at("logits").get<std::vector<double>>();
}

} // namespace

void save_theta(const Theta& theta, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path);
    }
    out << logits_to_json(theta.n, theta.logits, "theta").dump() << "\n";
}

Theta load_theta(const std::string& path) {
    Theta theta;
    load_logits(path, "theta", theta.n, theta.logits);
    const size_t expected = static_cast<size_t>(interval_state_count(theta.n)) *
                            static_cast<size_t>(theta.n);
    if (theta.logits.size() != expected) {
        throw std::runtime_error(path + ": logit count does not match answer_count");
    }
    return theta;
}

void save_phi(const Phi& phi, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path);
    }
    out << logits_to_json(phi.n, phi.logits, "phi").dump() << "\n";
}

Phi load_phi(const std::string& path) {
    Phi phi;
    load_logits(path, "phi", phi.n, phi.logits);
    const size_t expected = static_cast<size_t>(interval_state_count(phi.n)) *
                            static_cast<size_t>(phi.n) * 3;
    if (phi.logits.size() != expected) {
        throw std::runtime_error(path + ": logit count does not match answer_count");
    }
    return phi;
}

} // namespace didact::lab
