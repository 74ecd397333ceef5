#include <melep/io.hpp>

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using melep::io::Json;

namespace {

const fs::path fixtures = fs::path(MELEP_SOURCE_DIR) / "tests" / "fixtures";

fs::path work_dir()
{
    static const fs::path dir = [] {
        const auto d = fs::temp_directory_path() / ("melep_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Run
{
    int code = -1;
    std::string out;
    std::string err;
};

Run run(const std::string& args, const std::string& env = "")
{
    const auto out = work_dir() / "stdout.txt";
    const auto err = work_dir() / "stderr.txt";
    const std::string cmd = env + " '" MELEP_CLI_PATH "' " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string q(const fs::path& p)
{
    return "'" + p.string() + "'";
}

void write(const fs::path& p, const std::string& text)
{
    std::ofstream(p, std::ios::binary) << text;
}

/// Generates a synthetic bench and returns its directory.
fs::path synth_bench(const std::string& name, const std::string& config_text)
{
    const auto dir = work_dir() / name;
    const auto config = work_dir() / (name + ".json");
    write(config, config_text);
    const auto r = run("synth --config " + q(config) + " --out-dir " + q(dir));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return dir;
}

const char* study_config = R"({"label_count_min": 2, "label_count_max": 4, "fold_size": 60, "fold_count": 6,
  "train_fraction": 0.7, "min_label_positives": 40, "seed": 7})";

const char* bench_config = R"({"name": "bench", "world": {"latent_dim": 6, "record_count": 300, "label_count": 5,
  "prevalence_min": 0.3, "prevalence_max": 0.5, "seed": 3},
  "checkpoints": [{"checkpoint_id": "near", "alignment": 0.9, "noise_sigma": 0.5, "seed": 1},
                  {"checkpoint_id": "far", "alignment": 0.1, "noise_sigma": 0.5, "seed": 2}]})";

} // namespace

TEST_SUITE("cli")
{
    TEST_CASE("compute on the analytic fixtures")
    {
        auto r = run("compute --preds " + q(fixtures / "instance_a_preds.csv") + " --labels " +
                     q(fixtures / "instance_a_labels.csv"));
        REQUIRE_MESSAGE(r.code == 0, r.err);
        auto j = Json::parse(r.out);
        CHECK(std::fabs(j["melep"].get<double>() - 0.57185948020463706) <= 1e-10);
        CHECK(j["phi"].size() == 2);
        CHECK(j["per_label"].size() == 2);
        CHECK(j["weights"]["weights"][0] == 1.0);
        CHECK(j["clamp_events"] == 0);

        r = run("compute --preds " + q(fixtures / "separating_preds.csv") + " --labels " +
                q(fixtures / "separating_labels.csv"));
        CHECK(Json::parse(r.out)["melep"] == 0.0);

        r = run("compute --preds " + q(fixtures / "uniform_preds.csv") + " --labels " +
                q(fixtures / "uniform_labels.csv"));
        CHECK(std::fabs(Json::parse(r.out)["melep"].get<double>() - std::log(2.0)) <= 1e-12);
    }

    TEST_CASE("compute writes to --out and is byte-stable")
    {
        const auto a = work_dir() / "a.json";
        const auto b = work_dir() / "b.json";
        const std::string base =
            "compute --preds " + q(fixtures / "instance_a_preds.csv") + " --labels " + q(fixtures / "instance_a_labels.csv");
        CHECK(run(base + " --out " + q(a)).code == 0);
        CHECK(run(base + " --out " + q(b)).code == 0);
        CHECK(slurp(a) == slurp(b));
        CHECK(slurp(a) == run(base).out);
    }

    TEST_CASE("compute with source weights and a cap")
    {
        const auto w = work_dir() / "w.txt";
        write(w, "1\n1\n");
        const auto r = run("compute --preds " + q(fixtures / "instance_a_preds.csv") + " --labels " +
                           q(fixtures / "all_positive_labels.csv") + " --cap 2 --source-weights " + q(w));
        REQUIRE_MESSAGE(r.code == 0, r.err);
        const auto j = Json::parse(r.out);
        CHECK(j["weights"]["weights"][0] == 2.0);
        CHECK(j.contains("source_weighted_melep"));
    }

    TEST_CASE("data errors exit 2 with a useful message")
    {
        auto r = run("compute --preds " + q(fixtures / "instance_a_preds.csv") + " --labels " +
                     q(fixtures / "all_positive_labels.csv"));
        CHECK(r.code == 2);
        CHECK(r.err.find("l0") != std::string::npos);
        CHECK(r.out.empty());

        const auto bad = work_dir() / "bad.csv";
        write(bad, "id,s0,s1\nr0,0.9,0.2\nr1,1.5,0.7\nr2,0.1,0.6\nr3,0.3,0.4\n");
        r = run("compute --preds " + q(bad) + " --labels " + q(fixtures / "instance_a_labels.csv"));
        CHECK(r.code == 2);
        CHECK(r.err.find(":3:2:") != std::string::npos);

        r = run("compute --preds " + q(work_dir() / "nope.csv") + " --labels " + q(fixtures / "instance_a_labels.csv"));
        CHECK(r.code == 2);
    }

    TEST_CASE("usage errors exit 1")
    {
        CHECK(run("").code == 1);
        CHECK(run("compute --preds x.csv --labels y.csv --bogus").code == 1);
        CHECK(run("compute --labels y.csv").code == 1);
        CHECK(run("frobnicate").code == 1);
        CHECK(run("study --manifest m.json --sampler-config s.json --binning deciles").code == 1);
    }

    TEST_CASE("help for every subcommand")
    {
        CHECK(run("--help").code == 0);
        for (const char* sub : {"compute", "rank", "study", "synth"}) {
            const auto r = run(std::string(sub) + " --help");
            CHECK(r.code == 0);
            CHECK(r.out.find("--") != std::string::npos);
        }
    }

    TEST_CASE("synth writes consumable, reproducible files")
    {
        const char* minimal = R"({"world": {"record_count": 4, "label_count": 1, "latent_dim": 2,
          "prevalence_min": 0.5, "prevalence_max": 0.5, "seed": 1},
          "checkpoints": [{"checkpoint_id": "only"}]})";
        const auto a = synth_bench("minimal_a", minimal);
        const auto b = synth_bench("minimal_b", minimal);
        std::size_t files = 0;
        for (const auto& entry : fs::directory_iterator(a)) {
            ++files;
            CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
        }
        CHECK(files == 3);
        CHECK(fs::exists(a / "manifest.json"));
        CHECK(fs::exists(a / "labels.csv"));
        CHECK(fs::exists(a / "preds_only.csv"));

        const auto r = run("rank --manifest " + q(a / "manifest.json"));
        REQUIRE_MESSAGE(r.code == 0, r.err);
        CHECK(Json::parse(r.out)["ranking"].size() == 1);
    }

    TEST_CASE("paper-shaped synth output passes validation")
    {
        std::string config = R"({"world": {"record_count": 1000, "label_count": 20, "seed": 11}, "checkpoints": [)";
        for (int k = 0; k < 6; ++k)
            config += std::string(k ? "," : "") + R"({"checkpoint_id": "c)" + std::to_string(k) +
                      R"(", "alignment": )" + std::to_string(k / 5.0) + R"(, "noise_sigma": 0.5, "seed": )" +
                      std::to_string(k + 1) + "}";
        config += "]}";
        const auto dir = synth_bench("paper_shaped", config);
        const auto manifest = melep::io::read_manifest(dir / "manifest.json");
        const auto labels = melep::io::read_label_csv(manifest.labels_path);
        CHECK(labels.records() == 1000);
        CHECK(labels.target_labels() == 20);
        const auto ckpts = melep::io::load_checkpoints(manifest, labels);
        CHECK(ckpts.size() == 6);
    }

    TEST_CASE("synth into an unwritable location exits 2")
    {
        const auto blocker = work_dir() / "blocker";
        write(blocker, "x");
        const auto config = work_dir() / "tiny.json";
        write(config, R"({"world": {"record_count": 4, "label_count": 1}, "checkpoints": [{"checkpoint_id": "c"}]})");
        CHECK(run("synth --config " + q(config) + " --out-dir " + q(blocker / "sub")).code == 2);
        write(config, R"({"world": {"record_count": 4}, "checkpoints": [{"checkpoint_id": "../c"}]})");
        CHECK(run("synth --config " + q(config) + " --out-dir " + q(work_dir() / "evil")).code == 2);
    }

    TEST_CASE("rank orders checkpoints and documents ties")
    {
        const auto dir = synth_bench("rank_bench", bench_config);
        fs::copy_file(dir / "preds_near.csv", dir / "preds_twin.csv");
        auto manifest = Json::parse(slurp(dir / "manifest.json"));
        auto twin = manifest["predictions"][0];
        for (auto& p : manifest["predictions"])
            if (p["checkpoint_id"] == "near") twin = p;
        twin["checkpoint_id"] = "near_twin";
        twin["path"] = "preds_twin.csv";
        manifest["predictions"].push_back(twin);
        write(dir / "manifest3.json", manifest.dump());

        const auto r = run("rank --manifest " + q(dir / "manifest3.json") + " --threads 2");
        REQUIRE_MESSAGE(r.code == 0, r.err);
        const auto j = Json::parse(r.out);
        CHECK(j["ranking"][0]["checkpoint_id"] == "near");
        CHECK(j["ranking"][1]["checkpoint_id"] == "near_twin");
        CHECK(j["ranking"][1]["tied_with_previous"] == true);
        CHECK(j["ranking"][2]["checkpoint_id"] == "far");

        manifest["predictions"][0]["source_label_names"] = Json::array();
        write(dir / "manifest_bad.json", manifest.dump());
        CHECK(run("rank --manifest " + q(dir / "manifest_bad.json")).code == 2);
    }

    TEST_CASE("study runs, is byte-identical per seed and leaves inputs untouched")
    {
        const auto dir = synth_bench("study_bench", bench_config);
        const auto sampler = work_dir() / "sampler.json";
        write(sampler, study_config);
        const std::string labels_before = slurp(dir / "labels.csv");
        const std::string preds_before = slurp(dir / "preds_near.csv");

        const std::string base = "study --manifest " + q(dir / "manifest.json") + " --sampler-config " + q(sampler) +
                                 " --proxy";
        const auto one = run(base + " --folds-out " + q(work_dir() / "folds.json"));
        REQUIRE_MESSAGE(one.code == 0, one.err);
        const auto two = run(base, "MELEP_THREADS=3");
        CHECK(two.code == 0);
        CHECK(one.out == two.out);
        const auto j = Json::parse(one.out);
        CHECK(j["folds"].size() == 12);
        CHECK(j.contains("aggregate"));
        CHECK(j["f1_source"] == "ep-proxy");
        CHECK(Json::parse(slurp(work_dir() / "folds.json"))["folds"].size() == 6);
        CHECK(slurp(dir / "labels.csv") == labels_before);
        CHECK(slurp(dir / "preds_near.csv") == preds_before);

        const auto quantile = run(base + " --binning quantile");
        CHECK(quantile.code == 0);
        CHECK(Json::parse(quantile.out)["aggregate"]["binning"]["mode"] == "quantile");
    }

    TEST_CASE("study argument and data errors")
    {
        const auto dir = synth_bench("study_errors", bench_config);
        const auto sampler = work_dir() / "sampler_err.json";
        write(sampler, study_config);
        const std::string base = "study --manifest " + q(dir / "manifest.json") + " --sampler-config " + q(sampler);
        CHECK(run(base).code == 1);
        CHECK(run(base + " --proxy --f1 " + q(work_dir() / "f1.csv")).code == 1);

        const auto empty = work_dir() / "sampler_zero.json";
        write(empty, R"({"fold_count": 0, "min_label_positives": 1})");
        const auto r = run("study --manifest " + q(dir / "manifest.json") + " --sampler-config " + q(empty) + " --proxy");
        REQUIRE_MESSAGE(r.code == 0, r.err);
        CHECK_FALSE(Json::parse(r.out).contains("aggregate"));

        const auto impossible = work_dir() / "sampler_big.json";
        write(impossible, R"({"fold_size": 5000, "min_label_positives": 1, "label_count_max": 3})");
        CHECK(run("study --manifest " + q(dir / "manifest.json") + " --sampler-config " + q(impossible) + " --proxy")
                  .code == 2);

        CHECK(run(base + " --proxy", "MELEP_THREADS=nope").code == 2);
    }

    TEST_CASE("study with an external F1 table")
    {
        const auto dir = synth_bench("study_external", bench_config);
        const auto sampler = work_dir() / "sampler_ext.json";
        write(sampler, study_config);
        std::string table = "fold_id,checkpoint_id,weighted_f1\n";
        for (int f = 0; f < 6; ++f) {
            table += std::to_string(f) + ",near,0." + std::to_string(80 + f) + "\n";
            table += std::to_string(f) + ",far,0." + std::to_string(40 + f) + "\n";
        }
        write(work_dir() / "f1.csv", table);
        const auto r = run("study --manifest " + q(dir / "manifest.json") + " --sampler-config " + q(sampler) +
                           " --f1 " + q(work_dir() / "f1.csv"));
        REQUIRE_MESSAGE(r.code == 0, r.err);
        const auto j = Json::parse(r.out);
        CHECK(j["f1_source"] == "external");
        CHECK(j["aggregate"]["pearson"]["r"].get<double>() < 0.0);
    }
}
