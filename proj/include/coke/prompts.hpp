#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace coke {

enum class AwarenessKind { Prior, Direct, Posterior };

inline constexpr std::array<AwarenessKind, 3> kAllAwarenessKinds = {
    AwarenessKind::Prior, AwarenessKind::Direct, AwarenessKind::Posterior};

std::string_view to_string(AwarenessKind kind) noexcept;  // "prior", "direct", "posterior"
AwarenessKind parse_awareness_kind(std::string_view text);

// Which side of the knowledge boundary a question was placed on.
enum class Membership { Known, Unknown };

std::string_view to_string(Membership m) noexcept;  // "k", "unk"
Membership parse_membership(std::string_view text);

// A prompt family. `pattern` uses {question} and, for Posterior only, {answer}.
// Target patterns may use {answer} to mean the probe-time prediction.
struct PromptTemplate {
    AwarenessKind kind = AwarenessKind::Direct;
    std::string pattern;
    std::string target_known;
    std::string target_unknown;

    void validate() const;  // throws InvalidInput

    friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;
};

// The three prompt families shipped together as one versioned config.
class TemplateSet {
public:
    TemplateSet() = default;
    TemplateSet(std::string version, PromptTemplate prior, PromptTemplate direct,
                PromptTemplate posterior);

    // Built-in wording, character-for-character.
    static TemplateSet defaults();
    static TemplateSet from_json(const nlohmann::json& j);
    static TemplateSet load(const std::string& path);

    nlohmann::json to_json() const;

    const std::string& version() const noexcept { return version_; }
    const PromptTemplate& get(AwarenessKind kind) const {
        return templates_[static_cast<int>(kind)];
    }

private:
    std::string version_;
    std::array<PromptTemplate, 3> templates_{};
};

std::string render(const PromptTemplate& tmpl, std::string_view question,
                   const std::optional<std::string>& answer = std::nullopt);

std::string target_for(const PromptTemplate& tmpl, Membership membership,
                       std::string_view prediction);

}  // namespace coke
