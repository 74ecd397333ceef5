#include "support.hpp"
#include "synthetic_study.hpp"

#include <melep/errors.hpp>
#include <melep/io.hpp>
#include <melep/study.hpp>

#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using melep::Index;
using melep::ParseErrorKind;

namespace {

fs::path scratch_dir()
{
    static const fs::path dir = [] {
        const auto d = fs::temp_directory_path() / ("melep_io_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

fs::path write_file(const std::string& name, const std::string& text)
{
    const auto p = scratch_dir() / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

template <typename Fn>
melep::ParseError parse_error(Fn&& fn)
{
    try {
        fn();
    } catch (const melep::ParseError& e) {
        return e;
    }
    FAIL("expected a ParseError");
    throw std::logic_error("unreachable");
}

} // namespace

TEST_SUITE("io")
{
    TEST_CASE("minimal matrices")
    {
        const auto p = melep::io::read_prediction_csv(write_file("p1.csv", "id,A\nr1,0.5\n"));
        CHECK(p.records() == 1);
        CHECK(p(0, 0) == 0.5);
        CHECK(p.source_label_names() == std::vector<std::string>{"A"});
        CHECK(p.record_ids() == std::vector<std::string>{"r1"});

        const auto l = melep::io::read_label_csv(write_file("l1.csv", "id,X\nr1,1\n"));
        CHECK(l(0, 0) == 1);
    }

    TEST_CASE("accepted syntax")
    {
        const auto p = melep::io::read_prediction_csv(
            write_file("p2.csv", "\xEF\xBB\xBFid,A,B\r\nr1,1e-3,+0.25\r\nr2,1.,0\r\n\r\n"));
        CHECK(p(0, 0) == 0.001);
        CHECK(p(0, 1) == 0.25);
        CHECK(p(1, 0) == 1.0);
    }

    TEST_CASE("prediction errors carry coordinates")
    {
        auto e = parse_error([] { melep::io::read_prediction_csv(write_file("e1.csv", "id,A\nr1,1.2\n")); });
        CHECK(e.kind() == ParseErrorKind::out_of_range);
        CHECK(e.row() == 2);
        CHECK(e.column() == 2);
        CHECK(std::string(e.what()).find(":2:2:") != std::string::npos);

        e = parse_error([] { melep::io::read_prediction_csv(write_file("e2.csv", "id,A,B\nr1,0.1,abc\n")); });
        CHECK(e.kind() == ParseErrorKind::non_numeric_cell);
        CHECK(e.row() == 2);
        CHECK(e.column() == 3);

        e = parse_error([] { melep::io::read_prediction_csv(write_file("e3.csv", "name,A\nr1,0.1\n")); });
        CHECK(e.kind() == ParseErrorKind::missing_header);
        CHECK(e.row() == 1);

        e = parse_error([] { melep::io::read_prediction_csv(write_file("e4.csv", "")); });
        CHECK(e.kind() == ParseErrorKind::missing_header);

        e = parse_error([] { melep::io::read_prediction_csv(write_file("e5.csv", "id,A\nr1,0.1\nr1,0.2\n")); });
        CHECK(e.kind() == ParseErrorKind::duplicate_id);
        CHECK(e.row() == 3);

        e = parse_error([] { melep::io::read_prediction_csv(write_file("e6.csv", "id,A,B\nr1,0.1\n")); });
        CHECK(e.kind() == ParseErrorKind::ragged_row);
        CHECK(e.row() == 2);

        e = parse_error([] { melep::io::read_prediction_csv(write_file("e7.csv", "id,A\nr1,nan\n")); });
        CHECK(e.kind() == ParseErrorKind::non_numeric_cell);

        e = parse_error([] { melep::io::read_prediction_csv(scratch_dir() / "missing.csv"); });
        CHECK(e.kind() == ParseErrorKind::io);
    }

    TEST_CASE("label errors")
    {
        auto e = parse_error([] { melep::io::read_label_csv(write_file("l2.csv", "id,X\nr1,0.5\n")); });
        CHECK(e.kind() == ParseErrorKind::non_binary_cell);
        CHECK(e.row() == 2);
        CHECK(e.column() == 2);
        e = parse_error([] { melep::io::read_label_csv(write_file("l3.csv", "id,X\nr1,yes\n")); });
        CHECK(e.kind() == ParseErrorKind::non_numeric_cell);
    }

    TEST_CASE("prediction round trip is bit-exact")
    {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        melep::Matrix<double> m(50, 4);
        for (Index i = 0; i < 50; ++i)
            for (Index j = 0; j < 4; ++j) m(i, j) = u(rng);
        m(0, 0) = 0.0;
        m(1, 1) = 1.0;
        m(2, 2) = 5e-324;
        const melep::PredictionMatrix<double> p(m);
        const auto path = scratch_dir() / "round.csv";
        melep::io::write_prediction_csv(p, path);
        const auto back = melep::io::read_prediction_csv(path);
        CHECK(back.values() == p.values());
        CHECK(back.record_ids() == p.record_ids());
        CHECK(back.source_label_names() == p.source_label_names());
    }

    TEST_CASE("label round trip")
    {
        const auto a = testing::instance_a().label_matrix();
        const auto path = scratch_dir() / "labels_rt.csv";
        melep::io::write_label_csv(a, path);
        const auto back = melep::io::read_label_csv(path);
        CHECK(back.values() == a.values());
    }

    TEST_CASE("1000-row label file parses in under 100 ms")
    {
        std::string text = "id";
        for (int y = 0; y < 20; ++y) text += ",label_" + std::to_string(y);
        text += "\n";
        std::mt19937_64 rng(4);
        for (int i = 0; i < 1000; ++i) {
            text += "rec" + std::to_string(i);
            for (int y = 0; y < 20; ++y) text += (rng() & 1) ? ",1" : ",0";
            text += "\n";
        }
        const auto path = write_file("bench.csv", text);
        const auto start = std::chrono::steady_clock::now();
        const auto labels = melep::io::read_label_csv(path);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        CHECK(labels.records() == 1000);
        CHECK(ms < 100.0);
    }

    TEST_CASE("join by id")
    {
        const auto labels = melep::io::read_label_csv(write_file("jl.csv", "id,X\na,1\nb,0\nc,1\n"));
        const auto preds = melep::io::read_prediction_csv(write_file("jp.csv", "id,S\nc,0.3\na,0.1\nb,0.2\n"));
        const auto aligned = melep::io::align_to_labels(preds, labels);
        CHECK(aligned(0, 0) == 0.1);
        CHECK(aligned(1, 0) == 0.2);
        CHECK(aligned(2, 0) == 0.3);
        CHECK(aligned.record_ids() == labels.record_ids());

        const auto extra = melep::io::read_prediction_csv(write_file("jx.csv", "id,S\nc,0.3\na,0.1\nd,0.2\n"));
        CHECK(parse_error([&] { melep::io::align_to_labels(extra, labels); }).kind() == ParseErrorKind::unmatched_id);
        const auto fewer = melep::io::read_prediction_csv(write_file("jf.csv", "id,S\nc,0.3\na,0.1\n"));
        CHECK(parse_error([&] { melep::io::align_to_labels(fewer, labels); }).kind() == ParseErrorKind::unmatched_id);
    }

    TEST_CASE("canonical JSON")
    {
        melep::io::Json j = {{"b", 0.1}, {"a", {1, 2, 3}}, {"c", -0.0}, {"d", {{"z", true}, {"y", nullptr}}}};
        const auto text = melep::io::canonical_dump(j);
        CHECK(text.find("\"a\": [1, 2, 3]") != std::string::npos);
        CHECK(text.find("0.10000000000000001") != std::string::npos);
        CHECK(text.find("\"c\": 0") != std::string::npos);
        CHECK(text.find("\"a\"") < text.find("\"b\""));
        CHECK(text.back() == '\n');
        CHECK(melep::io::canonical_dump(j) == text);
    }

    TEST_CASE("manifest round trip and validation")
    {
        const auto dir = scratch_dir() / "manifest";
        fs::create_directories(dir);
        std::ofstream(dir / "labels.csv") << "id,X\nr1,1\nr2,0\n";
        std::ofstream(dir / "p.csv") << "id,S\nr2,0.2\nr1,0.9\n";
        melep::io::DatasetManifest m;
        m.name = "tiny";
        m.labels_path = "labels.csv";
        m.predictions.push_back({"c1", "p.csv", {"S"}});
        melep::io::write_manifest(m, dir / "manifest.json");

        const auto back = melep::io::read_manifest(dir / "manifest.json");
        CHECK(back.name == "tiny");
        CHECK(back.labels_path == dir / "labels.csv");
        const auto labels = melep::io::read_label_csv(back.labels_path);
        const auto ckpts = melep::io::load_checkpoints(back, labels);
        REQUIRE(ckpts.size() == 1);
        CHECK(ckpts[0].predictions(0, 0) == 0.9);

        std::ofstream(dir / "bad1.json") << R"({"schema_version":1,"name":"x","labels_path":"labels.csv","predictions":[{"checkpoint_id":"c","path":"p.csv","source_label_names":[]}]})";
        CHECK_THROWS_AS(melep::io::read_manifest(dir / "bad1.json"), melep::ParseError);
        std::ofstream(dir / "bad2.json") << R"({"schema_version":1,"name":"x","labels_path":"labels.csv","extra":1,"predictions":[]})";
        CHECK_THROWS_AS(melep::io::read_manifest(dir / "bad2.json"), melep::ParseError);
        std::ofstream(dir / "bad3.json") << R"({"schema_version":1,"name":"x","labels_path":"labels.csv","predictions":[{"checkpoint_id":"c","path":"p.csv","source_label_names":["T"]}]})";
        const auto mismatched = melep::io::read_manifest(dir / "bad3.json");
        CHECK_THROWS_AS(melep::io::load_checkpoints(mismatched, labels), melep::ParseError);
        std::ofstream(dir / "bad4.json") << R"({"schema_version":2,"name":"x","labels_path":"labels.csv","predictions":[]})";
        CHECK_THROWS_AS(melep::io::read_manifest(dir / "bad4.json"), melep::ParseError);
    }

    TEST_CASE("sampler config and folds round trip")
    {
        melep::SamplerConfig c;
        c.fold_size = 200;
        c.seed = 12345678901234ULL;
        const auto back = melep::io::sampler_config_from_json(melep::io::to_json(c));
        CHECK(back.fold_size == 200);
        CHECK(back.seed == c.seed);
        CHECK(back.train_fraction == c.train_fraction);
        CHECK_THROWS_AS(melep::io::sampler_config_from_json(melep::io::Json{{"fold_sise", 3}}), melep::ParseError);

        const auto labels = melep::generate_world(testing::correlation_setup(2).world).labels;
        c.fold_count = 5;
        const auto folds = melep::sample_folds(labels, c);
        CHECK(melep::io::folds_from_json(melep::io::folds_to_json(folds, c)) == folds);
    }

    TEST_CASE("synth config round trip")
    {
        melep::io::SynthConfig s;
        s.world.seed = 4;
        melep::CheckpointConfig c;
        c.checkpoint_id = "aligned";
        c.alignment = 0.75;
        s.checkpoints.push_back(c);
        const auto back = melep::io::synth_config_from_json(melep::io::to_json(s));
        CHECK(back.world.seed == 4);
        REQUIRE(back.checkpoints.size() == 1);
        CHECK(back.checkpoints[0].alignment == 0.75);
        CHECK(back.checkpoints[0].checkpoint_id == "aligned");
    }

    TEST_CASE("result report round trip and byte-identical writes")
    {
        auto setup = testing::correlation_setup(5);
        setup.sampler.fold_count = 10;
        const auto report = testing::run_synthetic_study(setup);
        REQUIRE(report.aggregate);
        const auto a = scratch_dir() / "report_a.json";
        const auto b = scratch_dir() / "report_b.json";
        melep::io::write_report(report, a);
        melep::io::write_report(testing::run_synthetic_study(setup), b);
        CHECK(slurp(a) == slurp(b));

        const auto back = melep::io::read_report(a);
        CHECK(back.folds == report.folds);
        CHECK(back.seed == report.seed);
        CHECK(back.aggregate->pearson.r == report.aggregate->pearson.r);
        CHECK(back.aggregate->binning.bin_counts == report.aggregate->binning.bin_counts);
        CHECK(back.per_checkpoint.size() == report.per_checkpoint.size());
        CHECK(melep::io::canonical_dump(melep::io::to_json(back)) == slurp(a));

        auto j = melep::io::read_json(a);
        j["schema_version"] = 99;
        melep::io::write_json(j, scratch_dir() / "report_v99.json");
        CHECK_THROWS_AS(melep::io::read_report(scratch_dir() / "report_v99.json"), melep::ParseError);
    }

    TEST_CASE("weight vector")
    {
        const auto v = melep::io::read_weight_vector(write_file("w.txt", "1\n0.5\n\n"));
        CHECK(v.size() == 2);
        CHECK(v(1) == 0.5);
        CHECK_THROWS_AS(melep::io::read_weight_vector(write_file("w2.txt", "1\n-2\n")), melep::ParseError);
    }
}
