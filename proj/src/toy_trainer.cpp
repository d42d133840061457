#include "coke/toy_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "coke/error.hpp"
#include "coke/io.hpp"
#include "coke/kernels.hpp"

namespace coke {

namespace {

constexpr const char* kCheckpointFormat = "coke-toy-checkpoint-1";

int idx(AwarenessKind k) { return static_cast<int>(k); }

// log(1 + e^x) without overflow
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

struct ExampleState {
    std::vector<double> phi;
    Role target = Role::Commit;
    double margin = 0.0;  // score(target) - score(other)
    double p = 0.0;       // P(target | prompt)
};

ExampleState evaluate(const ToyModel& model, const TrainingExample& ex) {
    ExampleState st;
    st.phi = extract_features(model.feature_config(), {ex.kind, ex.prompt, ex.confidence.value});
    st.target = model.role_of(ex.kind, ex.target);
    const auto s = model.scores(st.phi, ex.kind);
    const int t = st.target == Role::Commit ? 0 : 1;
    st.margin = s[t] - s[1 - t];
    st.p = sigmoid(st.margin);
    return st;
}

}  // namespace

std::vector<double> extract_features(const FeatureConfig& cfg, const ToyPrompt& prompt) {
    std::vector<double> phi(cfg.dim());
    phi[0] = 1.0;
    phi[1] = prompt.confidence;
    std::mt19937_64 rng(io::fnv1a(prompt.text, cfg.seed));
    std::normal_distribution<double> normal(0.0, cfg.nuisance_scale);
    for (std::size_t i = 0; i < cfg.nuisance_dim; ++i) phi[2 + i] = normal(rng);
    return phi;
}

ToyModel::ToyModel(FeatureConfig features, const TemplateSet& templates, InitConfig init)
    : features_(features), init_(init) {
    for (AwarenessKind k : kAllAwarenessKinds) {
        commit_[idx(k)] = templates.get(k).target_known;
        abstain_[idx(k)] = templates.get(k).target_unknown;
    }
    const std::size_t d = features_.dim();
    theta_.assign(3 * 2 * d, 0.0);
    std::mt19937_64 rng(init_.seed);
    std::normal_distribution<double> normal(0.0, init_.nuisance_weight_scale);
    // Abstain blocks start at zero; commit blocks carry the bias and random
    // nuisance sensitivity. The confidence weight starts at zero.
    for (AwarenessKind k : kAllAwarenessKinds) {
        double* w = theta_.data() + block(k, Role::Commit);
        w[0] = init_.commit_bias[idx(k)];
        for (std::size_t i = 2; i < d; ++i) w[i] = normal(rng);
    }
}

std::size_t ToyModel::block(AwarenessKind kind, Role role) const noexcept {
    return (static_cast<std::size_t>(idx(kind)) * 2 + (role == Role::Commit ? 0 : 1)) * features_.dim();
}

void ToyModel::add_answers(std::span<const std::string> answers) {
    for (const auto& a : answers)
        if (!a.empty()) answers_.insert(a);
}

void ToyModel::add_answers_from(const std::vector<ConsistencyGroup>& groups) {
    for (const auto& g : groups) {
        const auto& ex = g.example(AwarenessKind::Direct);
        if (ex.target != abstain_phrase(AwarenessKind::Direct)) answers_.insert(ex.target);
    }
}

Role ToyModel::role_of(AwarenessKind kind, const std::string& target) const {
    if (target == abstain_[idx(kind)]) return Role::Abstain;
    if (kind == AwarenessKind::Direct) {
        if (answers_.contains(target)) return Role::Commit;
    } else if (target == commit_[idx(kind)]) {
        return Role::Commit;
    }
    throw InvalidInput("target '" + target + "' is outside the " + std::string(to_string(kind)) +
                       " candidate vocabulary");
}

std::array<double, 2> ToyModel::scores(std::span<const double> features, AwarenessKind kind) const {
    const std::size_t d = features_.dim();
    if (features.size() != d) throw InvalidInput("feature vector has the wrong dimension");
    const std::span<const double> th(theta_);
    return {kernels::dot(th.subspan(block(kind, Role::Commit), d), features),
            kernels::dot(th.subspan(block(kind, Role::Abstain), d), features)};
}

std::array<double, 2> ToyModel::probabilities(const ToyPrompt& prompt) const {
    const auto s = scores(extract_features(features_, prompt), prompt.kind);
    const double pc = sigmoid(s[0] - s[1]);
    return {pc, 1.0 - pc};
}

std::string ToyModel::respond(const ToyPrompt& prompt, const std::string& recalled_answer) const {
    const auto s = scores(extract_features(features_, prompt), prompt.kind);
    if (s[0] >= s[1])
        return prompt.kind == AwarenessKind::Direct ? recalled_answer : commit_[idx(prompt.kind)];
    return abstain_[idx(prompt.kind)];
}

void ToyModel::save_checkpoint(const std::string& path, const nlohmann::json& extra) const {
    nlohmann::json header = {
        {"format", kCheckpointFormat},
        {"dimension", theta_.size()},
        {"feature_dim", features_.dim()},
        {"nuisance_dim", features_.nuisance_dim},
        {"nuisance_scale", features_.nuisance_scale},
        {"feature_seed", features_.seed},
        {"init_seed", init_.seed},
        {"init_commit_bias", init_.commit_bias},
        {"init_nuisance_weight_scale", init_.nuisance_weight_scale},
        {"layout", "[kind: prior, direct, posterior][role: commit, abstain][feature]"},
        {"consistency_pairs", "unordered i<j"},
        {"l_unsup", "target negative log-likelihood"},
        {"commit_phrases", commit_},
        {"abstain_phrases", abstain_},
    };
    std::vector<std::string> answers(answers_.begin(), answers_.end());
    std::sort(answers.begin(), answers.end());
    header["answers"] = answers;
    if (!extra.is_null()) header["metadata"] = extra;

    std::string out = header.dump() + "\n";
    char buf[40];
    for (std::size_t i = 0; i < theta_.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.17g", i ? " " : "", theta_[i]);
        out += buf;
    }
    out += "\n";
    io::write_file(path, out);
}

ToyModel ToyModel::from_checkpoint(const std::string& path) {
    std::istringstream in(io::read_file(path));
    std::string head, body;
    if (!std::getline(in, head) || !std::getline(in, body)) throw IoError(path, "truncated checkpoint");
    ToyModel m;
    try {
        const auto h = nlohmann::json::parse(head);
        if (h.at("format") != kCheckpointFormat) throw IoError(path, "unknown checkpoint format");
        m.features_.nuisance_dim = h.at("nuisance_dim").get<std::size_t>();
        m.features_.nuisance_scale = h.at("nuisance_scale").get<double>();
        m.features_.seed = h.at("feature_seed").get<std::uint64_t>();
        m.init_.seed = h.at("init_seed").get<std::uint64_t>();
        m.init_.commit_bias = h.at("init_commit_bias").get<std::array<double, 3>>();
        m.init_.nuisance_weight_scale = h.at("init_nuisance_weight_scale").get<double>();
        m.commit_ = h.at("commit_phrases").get<std::array<std::string, 3>>();
        m.abstain_ = h.at("abstain_phrases").get<std::array<std::string, 3>>();
        for (const auto& a : h.at("answers")) m.answers_.insert(a.get<std::string>());
        const auto dim = h.at("dimension").get<std::size_t>();
        std::istringstream vals(body);
        double v;
        while (vals >> v) m.theta_.push_back(v);
        if (m.theta_.size() != dim || dim != 6 * m.features_.dim())
            throw IoError(path, "checkpoint holds " + std::to_string(m.theta_.size()) +
                                    " parameters, header says " + std::to_string(dim));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path, std::string("malformed checkpoint header: ") + e.what());
    }
    return m;
}

double consistency_term(const std::array<double, 3>& p) noexcept {
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) s += (p[i] - p[j]) * (p[i] - p[j]);
    return s;
}

LossBreakdown loss(const ToyModel& model, const ConsistencyGroup& group) {
    group.validate();
    std::array<ExampleState, 3> st;
    for (int i = 0; i < 3; ++i) st[i] = evaluate(model, group.examples[i]);
    LossBreakdown out;
    for (int i = 0; i < 3; ++i) out.l_unsup += softplus(-st[i].margin);
    out.l_con = consistency_term({st[0].p, st[1].p, st[2].p});
    out.total = out.l_unsup + out.l_con;
    return out;
}

LossBreakdown accumulate_grad(const ToyModel& model, const ConsistencyGroup& group,
                              const LossWeights& weights, std::span<double> grad) {
    if (grad.size() != model.dimension()) throw InvalidInput("gradient buffer has the wrong dimension");
    group.validate();
    std::array<ExampleState, 3> st;
    for (int i = 0; i < 3; ++i) st[i] = evaluate(model, group.examples[i]);

    LossBreakdown out;
    double psum = 0.0;
    for (int i = 0; i < 3; ++i) {
        out.l_unsup += softplus(-st[i].margin);
        psum += st[i].p;
    }
    out.l_con = consistency_term({st[0].p, st[1].p, st[2].p});
    out.total = out.l_unsup + out.l_con;

    const std::size_t d = model.feature_config().dim();
    for (int i = 0; i < 3; ++i) {
        const double p = st[i].p;
        // d/d(margin) of -log P and of sum_{i<j} (P_i - P_j)^2
        const double g_unsup = -(1.0 - p);
        const double g_con = 2.0 * (3.0 * p - psum) * p * (1.0 - p);
        const double g = weights.unsup * g_unsup + weights.con * g_con;
        const AwarenessKind kind = group.examples[i].kind;
        const Role other = st[i].target == Role::Commit ? Role::Abstain : Role::Commit;
        kernels::axpy(g, st[i].phi, grad.subspan(model.block(kind, st[i].target), d));
        kernels::axpy(-g, st[i].phi, grad.subspan(model.block(kind, other), d));
    }
    return out;
}

std::vector<double> grad_loss(const ToyModel& model, const ConsistencyGroup& group,
                              const LossWeights& weights) {
    std::vector<double> g(model.dimension(), 0.0);
    accumulate_grad(model, group, weights, g);
    return g;
}

double LrSchedule::at(long step) const noexcept {
    if (step >= warmup_steps || warmup_steps <= 0) return peak;
    return initial + (peak - initial) * static_cast<double>(step) / static_cast<double>(warmup_steps);
}

TrainResult train(ToyModel model, const std::vector<ConsistencyGroup>& groups,
                  const TrainOptions& options) {
    if (options.steps < 1) throw InvalidInput("steps must be >= 1");
    if (groups.empty()) throw InvalidInput("no training groups");
    TrainResult result{std::move(model), {}};
    ToyModel& m = result.model;
    result.log.reserve(static_cast<std::size_t>(options.steps));
    std::vector<double> grad(m.dimension());
    const double inv_n = 1.0 / static_cast<double>(groups.size());

    for (long step = 0; step < options.steps; ++step) {
        std::fill(grad.begin(), grad.end(), 0.0);
        LossBreakdown mean;
        for (const auto& g : groups) {
            const auto lb = accumulate_grad(m, g, options.weights, grad);
            mean.l_unsup += lb.l_unsup;
            mean.l_con += lb.l_con;
        }
        mean.l_unsup *= inv_n;
        mean.l_con *= inv_n;
        mean.total = mean.l_unsup + mean.l_con;
        if (!std::isfinite(mean.total))
            throw TrainingFailure(step - 1, "loss became non-finite at step " + std::to_string(step));
        const double lr = options.schedule.at(step);
        result.log.push_back({step, lr, mean});
        kernels::axpy(-lr * inv_n, grad, m.params());
    }
    return result;
}

std::string training_log_jsonl(const std::vector<TrainLogEntry>& log) {
    std::string out;
    for (const auto& e : log) {
        nlohmann::json j = {{"step", e.step},
                            {"l_unsup", e.loss.l_unsup},
                            {"l_con", e.loss.l_con},
                            {"total", e.loss.total},
                            {"lr", e.lr}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace coke
