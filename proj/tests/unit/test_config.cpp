#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "coke/config.hpp"
#include "coke/error.hpp"
#include "coke/io.hpp"
#include "coke/manifest.hpp"

using namespace coke;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
    const auto p = (std::filesystem::temp_directory_path() / ("coke_unit_" + name)).string();
    io::write_file(p, text);
    return p;
}

}  // namespace

TEST_CASE("flags beat the file, the file beats defaults") {
    const auto path = write_temp("cfg.json", R"({"seed": 4, "signal": "prod-prob",
        "endpoint": {"base_url": "http://x", "model": "m"}, "train": {"steps": 10}})");
    ConfigResolver r;
    r.apply_file(path);
    r.apply_flags({{"seed", 9}});
    const auto c = r.resolve(true);
    CHECK(c.seed == 9);
    CHECK(c.signal == SignalKind::ProdProb);
    CHECK(c.train_steps == 10);
    CHECK(c.k_quantile == 0.20);
    CHECK(c.unk_quantile == 0.10);
    const auto d = r.describe();
    CHECK(d.find("seed = 9 (flag)") != std::string::npos);
    CHECK(d.find("(file)") != std::string::npos);
    CHECK(d.find("(default)") != std::string::npos);
    std::filesystem::remove(path);
}

TEST_CASE("every violation is reported at once") {
    const auto path = write_temp("bad.json", R"({"bogus": 1, "unk_quantile": 1.5,
        "endpoint": {"temperature": 0.7, "max_parallel": 0, "api_key": "sk"}, "seed": "x"})");
    ConfigResolver r;
    r.apply_file(path);
    try {
        r.resolve(true);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string all = e.what();
        for (const char* needle : {"bogus", "unk_quantile", "temperature", "max_parallel", "api_key", "seed",
                                   "base_url"})
            CHECK_MESSAGE(all.find(needle) != std::string::npos, needle);
        CHECK(e.violations().size() >= 7);
    }
    std::filesystem::remove(path);

    ConfigResolver fine;
    CHECK_NOTHROW(fine.resolve(false));
    CHECK_THROWS_AS(fine.resolve(true), ConfigError);
}

TEST_CASE("api key only from the environment and always masked") {
    ::setenv("COKE_API_KEY", "secret-value", 1);
    ConfigResolver r;
    r.apply_flags({{"endpoint.base_url", "http://x"}, {"endpoint.model", "m"}});
    r.apply_env();
    const auto c = r.resolve(true);
    CHECK(c.endpoint.api_key == "secret-value");
    CHECK(r.describe().find("secret-value") == std::string::npos);
    CHECK(r.resolved_json().dump().find("secret-value") == std::string::npos);
    ::unsetenv("COKE_API_KEY");
}

TEST_CASE("manifest checksums") {
    const auto out = write_temp("out.txt", "hello\n");
    RunManifest m;
    m.subcommand = "unit";
    m.seed = 3;
    m.add_outputs({out});
    CHECK(verify_manifest(m).empty());

    const auto path = write_temp("run.json", "");
    m.save(path);
    const auto back = RunManifest::load(path);
    CHECK(back.subcommand == "unit");
    CHECK(back.outputs == m.outputs);

    io::write_file(out, "changed\n");
    CHECK(verify_manifest(back).size() == 1);
    std::filesystem::remove(out);
    std::filesystem::remove(path);
}
