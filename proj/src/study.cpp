#include <melep/study.hpp>

#include <melep/errors.hpp>
#include <melep/random.hpp>
#include <melep/synth.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace melep {

unsigned default_thread_count()
{
    const char* env = std::getenv("MELEP_THREADS");
    if (env == nullptr || *env == '\0') return 1;
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (*end != '\0' || value < 1) throw InvalidArgument("MELEP_THREADS must be a positive integer");
    return static_cast<unsigned>(std::min<long>(value, 256));
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn)
{
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::jthread> pool;
    const auto workers = std::min<std::size_t>(threads, count);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

std::vector<RankedCheckpoint> rank_checkpoints(const LabelMatrix& labels,
                                               const std::vector<io::LoadedCheckpoint>& checkpoints,
                                               const MelepOptions<double>& options, unsigned threads)
{
    std::vector<RankedCheckpoint> ranking(checkpoints.size());
    parallel_for(checkpoints.size(), threads, [&](std::size_t k) {
        ranking[k].checkpoint_id = checkpoints[k].checkpoint_id;
        ranking[k].source_label_names = checkpoints[k].predictions.source_label_names();
        ranking[k].report = compute_melep(checkpoints[k].predictions, labels, options);
    });
    std::sort(ranking.begin(), ranking.end(), [](const RankedCheckpoint& a, const RankedCheckpoint& b) {
        if (a.report.melep != b.report.melep) return a.report.melep < b.report.melep;
        return a.checkpoint_id < b.checkpoint_id;
    });
    for (std::size_t k = 1; k < ranking.size(); ++k)
        ranking[k].tied_with_previous = ranking[k].report.melep == ranking[k - 1].report.melep;
    return ranking;
}

io::Json ranking_to_json(const std::vector<RankedCheckpoint>& ranking, const LabelMatrix& labels)
{
    io::Json rows = io::Json::array();
    for (std::size_t k = 0; k < ranking.size(); ++k) {
        const auto& entry = ranking[k];
        rows.push_back(io::Json{{"rank", k + 1},
                                {"checkpoint_id", entry.checkpoint_id},
                                {"melep", entry.report.melep},
                                {"tied_with_previous", entry.tied_with_previous},
                                {"report", io::to_json(entry.report, labels.target_label_names(),
                                                       entry.source_label_names)}});
    }
    return io::Json{{"schema_version", io::schema_version},
                    {"order", "ascending melep; ties by checkpoint_id (lexicographic)"},
                    {"ranking", rows}};
}

F1Table read_f1_table(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(ParseErrorKind::io, path.string(), 0, 0, "cannot open file");
    F1Table table;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_number == 1) {
            if (line != "fold_id,checkpoint_id,weighted_f1")
                throw ParseError(ParseErrorKind::missing_header, path.string(), 1, 1,
                                 "expected header `fold_id,checkpoint_id,weighted_f1`");
            continue;
        }
        std::stringstream row(line);
        std::string fold;
        std::string ckpt;
        std::string value;
        if (!std::getline(row, fold, ',') || !std::getline(row, ckpt, ',') || !std::getline(row, value, ',') ||
            row.rdbuf()->in_avail() != 0)
            throw ParseError(ParseErrorKind::ragged_row, path.string(), line_number, 0, "expected 3 cells");
        Index fold_id = 0;
        double f1 = 0.0;
        try {
            std::size_t used = 0;
            fold_id = std::stoll(fold, &used);
            if (used != fold.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ParseError(ParseErrorKind::non_numeric_cell, path.string(), line_number, 1, "fold_id is not an integer");
        }
        try {
            std::size_t used = 0;
            f1 = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ParseError(ParseErrorKind::non_numeric_cell, path.string(), line_number, 3, "weighted_f1 is not a number");
        }
        if (!(f1 >= 0.0 && f1 <= 1.0))
            throw ParseError(ParseErrorKind::out_of_range, path.string(), line_number, 3, "weighted_f1 outside [0, 1]");
        if (!table.emplace(std::make_pair(fold_id, ckpt), f1).second)
            throw ParseError(ParseErrorKind::duplicate_id, path.string(), line_number, 1,
                             "duplicate (fold_id, checkpoint_id) entry");
    }
    return table;
}

namespace {

std::optional<CorrelationResult> try_pearson(const std::vector<double>& xs, const std::vector<double>& ys)
{
    try {
        return pearson(xs, ys);
    } catch (const ConstantInput&) {
        return std::nullopt;
    } catch (const TooFewPoints&) {
        return std::nullopt;
    }
}

} // namespace

io::ResultReport run_study_on_folds(const LabelMatrix& labels, const std::vector<io::LoadedCheckpoint>& checkpoints,
                                    const std::vector<FoldSpec>& folds, const StudyOptions& options)
{
    if (checkpoints.empty()) throw InvalidArgument("a study needs at least one checkpoint");
    if (!options.proxy && !options.external_f1)
        throw InvalidArgument("a study needs either the proxy or an external F1 table");

    // Report rows are ordered by (fold_id, checkpoint_id).
    std::vector<std::size_t> ckpt_order(checkpoints.size());
    for (std::size_t k = 0; k < ckpt_order.size(); ++k) ckpt_order[k] = k;
    std::sort(ckpt_order.begin(), ckpt_order.end(),
              [&](std::size_t a, std::size_t b) { return checkpoints[a].checkpoint_id < checkpoints[b].checkpoint_id; });

    io::ResultReport report;
    report.generator = std::string(Rng::algorithm);
    report.seed = options.sampler.seed;
    report.f1_source = options.proxy ? "ep-proxy" : "external";
    report.folds.resize(folds.size() * checkpoints.size());

    MelepOptions<double> melep_options;
    melep_options.cap = options.weight_cap;

    parallel_for(report.folds.size(), options.threads, [&](std::size_t task) {
        const FoldSpec& fold = folds[task / checkpoints.size()];
        const auto& ckpt = checkpoints[ckpt_order[task % checkpoints.size()]];

        const LabelMatrix train_labels = labels.select(fold.train_record_ids, fold.selected_label_indices);
        const auto train_preds = ckpt.predictions.select_records(fold.train_record_ids);
        const auto melep = compute_melep(train_preds, train_labels, melep_options);

        io::FoldRecord& record = report.folds[task];
        record.fold_id = fold.fold_id;
        record.checkpoint_id = ckpt.checkpoint_id;
        record.melep = melep.melep;
        record.clamp_events = melep.clamp_events;
        if (options.proxy) {
            const LabelMatrix test_labels = labels.select(fold.test_record_ids, fold.selected_label_indices);
            const auto test_preds = ckpt.predictions.select_records(fold.test_record_ids);
            record.weighted_f1 = downstream_f1_proxy(train_preds, train_labels, test_preds, test_labels);
        } else {
            const auto it = options.external_f1->find({fold.fold_id, ckpt.checkpoint_id});
            if (it == options.external_f1->end())
                throw InvalidArgument("external F1 table has no entry for fold " + std::to_string(fold.fold_id) +
                                      ", checkpoint `" + ckpt.checkpoint_id + "`");
            record.weighted_f1 = it->second;
        }
    });

    if (report.folds.empty()) return report;

    std::vector<double> all_melep;
    std::vector<double> all_f1;
    for (const auto& r : report.folds) {
        all_melep.push_back(r.melep);
        all_f1.push_back(*r.weighted_f1);
    }
    if (auto overall = try_pearson(all_melep, all_f1); overall && all_melep.size() >= 4) {
        io::StudyAggregate aggregate;
        aggregate.pearson = *overall;
        aggregate.binning_mode = options.binning;
        try {
            aggregate.binning = bin_by_distance(all_melep, all_f1, options.binning);
            report.aggregate = aggregate;
        } catch (const ConstantInput&) {
        }
    }

    for (std::size_t k : ckpt_order) {
        std::vector<double> xs;
        std::vector<double> ys;
        for (const auto& r : report.folds)
            if (r.checkpoint_id == checkpoints[k].checkpoint_id) {
                xs.push_back(r.melep);
                ys.push_back(*r.weighted_f1);
            }
        if (auto c = try_pearson(xs, ys)) report.per_checkpoint.push_back({checkpoints[k].checkpoint_id, *c});
    }
    return report;
}

io::ResultReport run_study(const LabelMatrix& labels, const std::vector<io::LoadedCheckpoint>& checkpoints,
                           const StudyOptions& options)
{
    const auto folds = sample_folds(labels, options.sampler);
    return run_study_on_folds(labels, checkpoints, folds, options);
}

} // namespace melep
