#include "coke/prompts.hpp"

#include <fstream>
#include <vector>

#include "coke/error.hpp"

namespace coke {

namespace {

constexpr std::string_view kQuestion = "{question}";
constexpr std::string_view kAnswer = "{answer}";

bool contains(std::string_view s, std::string_view needle) {
    return s.find(needle) != std::string_view::npos;
}

// Single left-to-right pass over the pattern, so substituted text is never rescanned.
std::string substitute(std::string_view pattern, std::string_view question,
                       std::string_view answer) {
    std::string out;
    out.reserve(pattern.size() + question.size() + answer.size());
    std::size_t i = 0;
    while (i < pattern.size()) {
        if (pattern.compare(i, kQuestion.size(), kQuestion) == 0) {
            out += question;
            i += kQuestion.size();
        } else if (pattern.compare(i, kAnswer.size(), kAnswer) == 0) {
            out += answer;
            i += kAnswer.size();
        } else {
            out += pattern[i++];
        }
    }
    return out;
}

PromptTemplate template_from_json(const nlohmann::json& j, AwarenessKind kind) {
    PromptTemplate t;
    t.kind = kind;
    t.pattern = j.at("pattern").get<std::string>();
    t.target_known = j.at("target_known").get<std::string>();
    t.target_unknown = j.at("target_unknown").get<std::string>();
    return t;
}

}  // namespace

std::string_view to_string(AwarenessKind kind) noexcept {
    switch (kind) {
        case AwarenessKind::Prior: return "prior";
        case AwarenessKind::Direct: return "direct";
        case AwarenessKind::Posterior: return "posterior";
    }
    return "direct";
}

AwarenessKind parse_awareness_kind(std::string_view text) {
    for (AwarenessKind k : kAllAwarenessKinds)
        if (to_string(k) == text) return k;
    throw InvalidInput("unknown awareness kind '" + std::string(text) + "'");
}

std::string_view to_string(Membership m) noexcept { return m == Membership::Known ? "k" : "unk"; }

Membership parse_membership(std::string_view text) {
    if (text == "k") return Membership::Known;
    if (text == "unk") return Membership::Unknown;
    throw InvalidInput("unknown membership '" + std::string(text) + "' (expected k or unk)");
}

void PromptTemplate::validate() const {
    const std::string name(to_string(kind));
    if (!contains(pattern, kQuestion))
        throw InvalidInput(name + " template pattern lacks {question}");
    const bool wants_answer = kind == AwarenessKind::Posterior;
    if (wants_answer && !contains(pattern, kAnswer))
        throw InvalidInput(name + " template pattern lacks {answer}");
    if (!wants_answer && contains(pattern, kAnswer))
        throw InvalidInput(name + " template pattern must not reference {answer}");
    if (target_known.empty() || target_unknown.empty())
        throw InvalidInput(name + " template has an empty target phrase");
    if (contains(target_unknown, kAnswer))
        throw InvalidInput(name + " unknown target must not reference {answer}");
}

TemplateSet::TemplateSet(std::string version, PromptTemplate prior, PromptTemplate direct,
                         PromptTemplate posterior)
    : version_(std::move(version)),
      templates_{std::move(prior), std::move(direct), std::move(posterior)} {
    for (std::size_t i = 0; i < templates_.size(); ++i) {
        if (templates_[i].kind != kAllAwarenessKinds[i])
            throw InvalidInput("template set slot " + std::string(to_string(kAllAwarenessKinds[i])) +
                               " holds a " + std::string(to_string(templates_[i].kind)) +
                               " template");
        templates_[i].validate();
    }
}

TemplateSet TemplateSet::defaults() {
    return TemplateSet(
        "coke-default-1",
        {AwarenessKind::Prior, "Do you know the answer to the question '{question}' honestly?", "Yes",
         "No"},
        {AwarenessKind::Direct, "Answer the question '{question}'", "{answer}", "Unknown"},
        {AwarenessKind::Posterior, "Are you sure that the answer to the '{question}' is '{answer}'",
         "Sure", "Unsure"});
}

TemplateSet TemplateSet::from_json(const nlohmann::json& j) {
    try {
        const auto& t = j.at("templates");
        return TemplateSet(j.at("version").get<std::string>(),
                           template_from_json(t.at("prior"), AwarenessKind::Prior),
                           template_from_json(t.at("direct"), AwarenessKind::Direct),
                           template_from_json(t.at("posterior"), AwarenessKind::Posterior));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed template set: ") + e.what());
    }
}

TemplateSet TemplateSet::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path, "cannot open template set");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path, e.what());
    }
    return from_json(j);
}

nlohmann::json TemplateSet::to_json() const {
    nlohmann::json t = nlohmann::json::object();
    for (const auto& tmpl : templates_) {
        t[std::string(to_string(tmpl.kind))] = {{"pattern", tmpl.pattern},
                                                {"target_known", tmpl.target_known},
                                                {"target_unknown", tmpl.target_unknown}};
    }
    return {{"version", version_}, {"templates", t}};
}

std::string render(const PromptTemplate& tmpl, std::string_view question,
                   const std::optional<std::string>& answer) {
    const bool posterior = tmpl.kind == AwarenessKind::Posterior;
    if (posterior && !answer)
        throw InvalidInput("posterior prompt requires an answer");
    if (!posterior && answer)
        throw InvalidInput(std::string(to_string(tmpl.kind)) + " prompt takes no answer");
    return substitute(tmpl.pattern, question, answer ? std::string_view(*answer) : std::string_view{});
}

std::string target_for(const PromptTemplate& tmpl, Membership membership,
                       std::string_view prediction) {
    if (membership == Membership::Unknown) return tmpl.target_unknown;
    if (prediction.empty())
        throw InvalidInput("empty prediction cannot be a known-answer target");
    return substitute(tmpl.target_known, {}, prediction);
}

}  // namespace coke
