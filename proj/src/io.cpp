#include <melep/io.hpp>

#include <melep/errors.hpp>
#include <melep/random.hpp>

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

namespace melep::io {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvRow
{
    std::size_t line = 0;
    std::string id;
    std::vector<std::string> cells;
};

struct CsvTable
{
    std::vector<std::string> columns;
    std::vector<CsvRow> rows;
};

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(ParseErrorKind::io, path.string(), 0, 0, "cannot open file");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_cells(std::string_view line)
{
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

CsvTable read_csv(const fs::path& path)
{
    const std::string text = read_file(path);
    std::string_view rest(text);
    if (rest.starts_with("\xEF\xBB\xBF")) rest.remove_prefix(3);

    std::vector<std::string_view> lines;
    while (!rest.empty()) {
        const auto newline = rest.find('\n');
        std::string_view line = rest.substr(0, newline);
        if (line.ends_with('\r')) line.remove_suffix(1);
        lines.push_back(line);
        if (newline == std::string_view::npos) break;
        rest.remove_prefix(newline + 1);
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();

    const std::string where = path.string();
    if (lines.empty()) throw ParseError(ParseErrorKind::missing_header, where, 1, 0, "file is empty, expected header `id,...`");

    CsvTable table;
    auto header = split_cells(lines.front());
    if (header.front() != "id")
        throw ParseError(ParseErrorKind::missing_header, where, 1, 1, "header must start with `id`, got `" + header.front() + "`");
    if (header.size() < 2) throw ParseError(ParseErrorKind::missing_header, where, 1, 0, "header has no label columns");
    std::unordered_set<std::string> seen_columns;
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c].empty()) throw ParseError(ParseErrorKind::missing_header, where, 1, c + 1, "empty column name");
        if (!seen_columns.insert(header[c]).second)
            throw ParseError(ParseErrorKind::missing_header, where, 1, c + 1, "duplicate column name `" + header[c] + "`");
    }
    table.columns.assign(header.begin() + 1, header.end());

    std::unordered_set<std::string> seen_ids;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const std::size_t line_number = k + 1;
        auto cells = split_cells(lines[k]);
        if (cells.size() != header.size())
            throw ParseError(ParseErrorKind::ragged_row, where, line_number, std::min(cells.size(), header.size()) + 1,
                             "expected " + std::to_string(header.size()) + " cells, found " +
                                 std::to_string(cells.size()));
        if (cells.front().empty()) throw ParseError(ParseErrorKind::duplicate_id, where, line_number, 1, "empty record id");
        if (!seen_ids.insert(cells.front()).second)
            throw ParseError(ParseErrorKind::duplicate_id, where, line_number, 1, "duplicate record id `" + cells.front() + "`");
        CsvRow row;
        row.line = line_number;
        row.id = std::move(cells.front());
        row.cells.assign(std::make_move_iterator(cells.begin() + 1), std::make_move_iterator(cells.end()));
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty()) throw ParseError(ParseErrorKind::schema, where, 0, 0, "file has a header but no records");
    return table;
}

double parse_number(const std::string& cell, const std::string& where, std::size_t line, std::size_t column)
{
    std::string_view text(cell);
    if (text.starts_with('+')) text.remove_prefix(1);
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec == std::errc::invalid_argument || ptr != end || std::isnan(value))
        throw ParseError(ParseErrorKind::non_numeric_cell, where, line, column, "cell `" + cell + "` is not a number");
    if (ec == std::errc::result_out_of_range || std::isinf(value))
        throw ParseError(ParseErrorKind::out_of_range, where, line, column, "cell `" + cell + "` is out of range");
    return value;
}

std::string format_double(double v)
{
    if (v == 0.0) v = 0.0; // folds -0 into 0
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    return buffer;
}

void write_text(const std::string& text, const fs::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError(ParseErrorKind::io, path.string(), 0, 0, "cannot open file for writing");
    out << text;
    if (!out) throw ParseError(ParseErrorKind::io, path.string(), 0, 0, "write failed");
}

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

[[noreturn]] void schema_error(const std::string& context, const std::string& what)
{
    throw ParseError(ParseErrorKind::schema, context, 0, 0, what);
}

const Json& field(const Json& j, const char* key, const std::string& context)
{
    if (!j.is_object()) schema_error(context, "expected a JSON object");
    const auto it = j.find(key);
    if (it == j.end()) schema_error(context, std::string("missing field `") + key + "`");
    return *it;
}

template <typename T>
T get_as(const Json& j, const char* key, const std::string& context)
{
    const Json& v = field(j, key, context);
    try {
        if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw std::invalid_argument("not a number");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw std::invalid_argument("not an integer");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw std::invalid_argument("not a string");
        }
        return v.get<T>();
    } catch (const std::exception& e) {
        schema_error(context, std::string("field `") + key + "` has the wrong type (" + e.what() + ")");
    }
}

template <typename T>
void read_optional(const Json& j, const char* key, const std::string& context, T& out)
{
    if (j.contains(key)) out = get_as<T>(j, key, context);
}

void reject_unknown_keys(const Json& j, std::initializer_list<const char*> known, const std::string& context)
{
    for (const auto& [key, _] : j.items())
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
            schema_error(context, "unknown field `" + key + "`");
}

void check_schema_version(const Json& j, const std::string& context)
{
    const int version = get_as<int>(j, "schema_version", context);
    if (version != schema_version)
        schema_error(context, "schema_version " + std::to_string(version) + " is not supported (expected " +
                                  std::to_string(schema_version) + ")");
}

Json index_array(const IndexList& values)
{
    Json out = Json::array();
    for (Index v : values) out.push_back(v);
    return out;
}

IndexList index_list(const Json& j, const char* key, const std::string& context)
{
    const Json& v = field(j, key, context);
    if (!v.is_array()) schema_error(context, std::string("field `") + key + "` must be an array");
    IndexList out;
    for (const auto& item : v) {
        if (!item.is_number_integer()) schema_error(context, std::string("field `") + key + "` must hold integers");
        out.push_back(item.get<Index>());
    }
    return out;
}

void dump_into(const Json& value, int depth, std::string& out)
{
    const std::string pad(static_cast<std::size_t>(depth + 1) * 2, ' ');
    const std::string close_pad(static_cast<std::size_t>(depth) * 2, ' ');
    switch (value.type()) {
    case Json::value_t::number_float: {
        const double v = value.get<double>();
        if (!std::isfinite(v)) throw InvalidArgument("cannot serialize a non-finite number to JSON");
        out += format_double(v);
        break;
    }
    case Json::value_t::array: {
        if (value.empty()) {
            out += "[]";
            break;
        }
        const bool flat = std::none_of(value.begin(), value.end(),
                                       [](const Json& item) { return item.is_structured(); });
        if (flat) {
            out += '[';
            for (std::size_t i = 0; i < value.size(); ++i) {
                if (i) out += ", ";
                dump_into(value[i], depth + 1, out);
            }
            out += ']';
            break;
        }
        out += "[\n";
        for (std::size_t i = 0; i < value.size(); ++i) {
            out += pad;
            dump_into(value[i], depth + 1, out);
            out += i + 1 < value.size() ? ",\n" : "\n";
        }
        out += close_pad + ']';
        break;
    }
    case Json::value_t::object: {
        if (value.empty()) {
            out += "{}";
            break;
        }
        out += "{\n";
        std::size_t i = 0;
        // nlohmann::json stores objects in a std::map, so iteration is key-sorted.
        for (const auto& [key, item] : value.items()) {
            out += pad + Json(key).dump() + ": ";
            dump_into(item, depth + 1, out);
            out += ++i < value.size() ? ",\n" : "\n";
        }
        out += close_pad + '}';
        break;
    }
    default:
        out += value.dump();
    }
}

Json optional_number(const std::optional<double>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

Json to_json(const CorrelationResult& c)
{
    return Json{{"r", c.r},
                {"p_value", c.p_value},
                {"sample_count", c.sample_count},
                {"fit_slope", c.fit_slope},
                {"fit_intercept", c.fit_intercept}};
}

CorrelationResult correlation_from_json(const Json& j, const std::string& context)
{
    CorrelationResult c;
    c.r = get_as<double>(j, "r", context);
    c.p_value = get_as<double>(j, "p_value", context);
    c.sample_count = get_as<Index>(j, "sample_count", context);
    c.fit_slope = get_as<double>(j, "fit_slope", context);
    c.fit_intercept = get_as<double>(j, "fit_intercept", context);
    return c;
}

std::vector<std::string> string_list(const Json& j, const char* key, const std::string& context)
{
    const Json& v = field(j, key, context);
    if (!v.is_array()) schema_error(context, std::string("field `") + key + "` must be an array of strings");
    std::vector<std::string> out;
    for (const auto& item : v) {
        if (!item.is_string()) schema_error(context, std::string("field `") + key + "` must be an array of strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// CSV matrices
// ---------------------------------------------------------------------------

PredictionMatrix<double> read_prediction_csv(const fs::path& path)
{
    const auto table = read_csv(path);
    const auto rows = static_cast<Index>(table.rows.size());
    const auto cols = static_cast<Index>(table.columns.size());
    const std::string where = path.string();

    Matrix<double> values(rows, cols);
    std::vector<std::string> ids;
    ids.reserve(table.rows.size());
    for (Index i = 0; i < rows; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        for (Index z = 0; z < cols; ++z) {
            const auto column = static_cast<std::size_t>(z) + 2;
            const double v = parse_number(row.cells[static_cast<std::size_t>(z)], where, row.line, column);
            if (!(v >= 0.0 && v <= 1.0))
                throw ParseError(ParseErrorKind::out_of_range, where, row.line, column,
                                 "probability " + row.cells[static_cast<std::size_t>(z)] + " is outside [0, 1] (record `" +
                                     row.id + "`, label `" + table.columns[static_cast<std::size_t>(z)] + "`)");
            values(i, z) = v;
        }
        ids.push_back(row.id);
    }
    return PredictionMatrix<double>(std::move(values), table.columns, std::move(ids));
}

LabelMatrix read_label_csv(const fs::path& path)
{
    const auto table = read_csv(path);
    const auto rows = static_cast<Index>(table.rows.size());
    const auto cols = static_cast<Index>(table.columns.size());
    const std::string where = path.string();

    BinaryMatrix values(rows, cols);
    std::vector<std::string> ids;
    ids.reserve(table.rows.size());
    for (Index i = 0; i < rows; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        for (Index y = 0; y < cols; ++y) {
            const auto column = static_cast<std::size_t>(y) + 2;
            const auto& cell = row.cells[static_cast<std::size_t>(y)];
            const double v = parse_number(cell, where, row.line, column);
            if (v != 0.0 && v != 1.0)
                throw ParseError(ParseErrorKind::non_binary_cell, where, row.line, column,
                                 "label cell `" + cell + "` is not 0 or 1 (record `" + row.id + "`, label `" +
                                     table.columns[static_cast<std::size_t>(y)] + "`)");
            values(i, y) = v == 1.0 ? 1 : 0;
        }
        ids.push_back(row.id);
    }
    return LabelMatrix(std::move(values), table.columns, std::move(ids));
}

void write_prediction_csv(const PredictionMatrix<double>& preds, const fs::path& path)
{
    std::string text = "id";
    for (const auto& name : preds.source_label_names()) text += "," + name;
    text += '\n';
    for (Index i = 0; i < preds.records(); ++i) {
        text += preds.record_ids()[static_cast<std::size_t>(i)];
        for (Index z = 0; z < preds.source_labels(); ++z) text += "," + format_double(preds(i, z));
        text += '\n';
    }
    write_text(text, path);
}

void write_label_csv(const LabelMatrix& labels, const fs::path& path)
{
    std::string text = "id";
    for (const auto& name : labels.target_label_names()) text += "," + name;
    text += '\n';
    for (Index i = 0; i < labels.records(); ++i) {
        text += labels.record_ids()[static_cast<std::size_t>(i)];
        for (Index y = 0; y < labels.target_labels(); ++y) text += labels(i, y) ? ",1" : ",0";
        text += '\n';
    }
    write_text(text, path);
}

PredictionMatrix<double> align_to_labels(const PredictionMatrix<double>& preds, const LabelMatrix& labels,
                                         const std::string& preds_origin)
{
    if (preds.record_ids() == labels.record_ids()) return preds;

    std::unordered_map<std::string, Index> rows;
    for (Index i = 0; i < preds.records(); ++i) rows.emplace(preds.record_ids()[static_cast<std::size_t>(i)], i);

    IndexList order;
    order.reserve(static_cast<std::size_t>(labels.records()));
    for (Index i = 0; i < labels.records(); ++i) {
        const auto& id = labels.record_ids()[static_cast<std::size_t>(i)];
        const auto it = rows.find(id);
        if (it == rows.end())
            throw ParseError(ParseErrorKind::unmatched_id, preds_origin, 0, 0,
                             "record `" + id + "` from the labels has no prediction row");
        order.push_back(it->second);
    }
    if (preds.records() != labels.records()) {
        std::unordered_set<std::string> label_ids(labels.record_ids().begin(), labels.record_ids().end());
        for (const auto& id : preds.record_ids())
            if (!label_ids.count(id))
                throw ParseError(ParseErrorKind::unmatched_id, preds_origin, 0, 0,
                                 "prediction record `" + id + "` has no label row");
    }
    return preds.select_records(order);
}

Vector<double> read_weight_vector(const fs::path& path)
{
    const std::string text = read_file(path);
    std::istringstream in(text);
    std::vector<double> values;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto cell = trim(line.ends_with('\r') ? std::string_view(line).substr(0, line.size() - 1) : line);
        if (cell.empty()) continue;
        const double v = parse_number(std::string(cell), path.string(), line_number, 1);
        if (v < 0.0) throw ParseError(ParseErrorKind::out_of_range, path.string(), line_number, 1, "weight is negative");
        values.push_back(v);
    }
    if (values.empty()) throw ParseError(ParseErrorKind::schema, path.string(), 0, 0, "no weights found");
    return Eigen::Map<const Vector<double>>(values.data(), static_cast<Index>(values.size()));
}

// ---------------------------------------------------------------------------
// Canonical JSON
// ---------------------------------------------------------------------------

std::string canonical_dump(const Json& value)
{
    std::string out;
    dump_into(value, 0, out);
    out += '\n';
    return out;
}

void write_json(const Json& value, const fs::path& path)
{
    write_text(canonical_dump(value), path);
}

Json read_json(const fs::path& path)
{
    const std::string text = read_file(path);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(ParseErrorKind::schema, path.string(), 0, 0, std::string("invalid JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Manifests and configs
// ---------------------------------------------------------------------------

DatasetManifest read_manifest(const fs::path& path)
{
    const Json j = read_json(path);
    const std::string context = path.string();
    reject_unknown_keys(j, {"schema_version", "name", "labels_path", "predictions"}, context);
    check_schema_version(j, context);

    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

    DatasetManifest manifest;
    manifest.name = get_as<std::string>(j, "name", context);
    manifest.labels_path = resolve(get_as<std::string>(j, "labels_path", context));

    const Json& entries = field(j, "predictions", context);
    if (!entries.is_array()) schema_error(context, "`predictions` must be an array");
    std::set<std::string> seen;
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const Json& e = entries[k];
        const std::string entry_context = context + " predictions[" + std::to_string(k) + "]";
        reject_unknown_keys(e, {"checkpoint_id", "path", "source_label_names"}, entry_context);
        CheckpointEntry entry;
        entry.checkpoint_id = get_as<std::string>(e, "checkpoint_id", entry_context);
        entry.path = resolve(get_as<std::string>(e, "path", entry_context));
        entry.source_label_names = string_list(e, "source_label_names", entry_context);
        if (entry.checkpoint_id.empty()) schema_error(entry_context, "empty checkpoint_id");
        if (!seen.insert(entry.checkpoint_id).second)
            schema_error(entry_context, "duplicate checkpoint_id `" + entry.checkpoint_id + "`");
        if (entry.source_label_names.empty())
            schema_error(entry_context, "checkpoint `" + entry.checkpoint_id + "` lists no source labels");
        std::set<std::string> names(entry.source_label_names.begin(), entry.source_label_names.end());
        if (names.size() != entry.source_label_names.size())
            schema_error(entry_context, "duplicate source label name in checkpoint `" + entry.checkpoint_id + "`");
        manifest.predictions.push_back(std::move(entry));
    }
    return manifest;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path)
{
    Json entries = Json::array();
    for (const auto& e : manifest.predictions)
        entries.push_back(Json{{"checkpoint_id", e.checkpoint_id},
                               {"path", e.path.generic_string()},
                               {"source_label_names", e.source_label_names}});
    write_json(Json{{"schema_version", manifest.schema_version},
                    {"name", manifest.name},
                    {"labels_path", manifest.labels_path.generic_string()},
                    {"predictions", entries}},
               path);
}

std::vector<LoadedCheckpoint> load_checkpoints(const DatasetManifest& manifest, const LabelMatrix& labels)
{
    if (manifest.predictions.empty()) schema_error(manifest.name, "manifest lists no checkpoints");
    std::vector<LoadedCheckpoint> out;
    for (const auto& entry : manifest.predictions) {
        auto preds = read_prediction_csv(entry.path);
        if (preds.source_label_names() != entry.source_label_names)
            throw ParseError(ParseErrorKind::schema, entry.path.string(), 1, 0,
                             "header does not match the manifest's source_label_names for checkpoint `" +
                                 entry.checkpoint_id + "`");
        out.push_back({entry.checkpoint_id, align_to_labels(preds, labels, entry.path.string())});
    }
    return out;
}

Json to_json(const SamplerConfig& c)
{
    return Json{{"label_count_min", c.label_count_min},
                {"label_count_max", c.label_count_max},
                {"fold_size", c.fold_size},
                {"fold_count", c.fold_count},
                {"train_fraction", c.train_fraction},
                {"min_label_positives", c.min_label_positives},
                {"seed", c.seed},
                {"max_retries", c.max_retries}};
}

SamplerConfig sampler_config_from_json(const Json& j)
{
    const std::string context = "sampler config";
    if (!j.is_object()) schema_error(context, "expected a JSON object");
    reject_unknown_keys(j,
                        {"schema_version", "label_count_min", "label_count_max", "fold_size", "fold_count",
                         "train_fraction", "min_label_positives", "seed", "max_retries"},
                        context);
    if (j.contains("schema_version")) check_schema_version(j, context);
    SamplerConfig c;
    read_optional(j, "label_count_min", context, c.label_count_min);
    read_optional(j, "label_count_max", context, c.label_count_max);
    read_optional(j, "fold_size", context, c.fold_size);
    read_optional(j, "fold_count", context, c.fold_count);
    read_optional(j, "train_fraction", context, c.train_fraction);
    read_optional(j, "min_label_positives", context, c.min_label_positives);
    read_optional(j, "seed", context, c.seed);
    read_optional(j, "max_retries", context, c.max_retries);
    c.validate();
    return c;
}

Json folds_to_json(const std::vector<FoldSpec>& folds, const SamplerConfig& config)
{
    Json list = Json::array();
    for (const auto& f : folds)
        list.push_back(Json{{"fold_id", f.fold_id},
                            {"selected_label_indices", index_array(f.selected_label_indices)},
                            {"train_record_ids", index_array(f.train_record_ids)},
                            {"test_record_ids", index_array(f.test_record_ids)}});
    return Json{{"schema_version", schema_version},
                {"generator", std::string(Rng::algorithm)},
                {"sampler_config", to_json(config)},
                {"folds", list}};
}

std::vector<FoldSpec> folds_from_json(const Json& j)
{
    const std::string context = "fold spec";
    check_schema_version(j, context);
    const Json& list = field(j, "folds", context);
    if (!list.is_array()) schema_error(context, "`folds` must be an array");
    std::vector<FoldSpec> folds;
    for (const auto& f : list) {
        FoldSpec spec;
        spec.fold_id = get_as<Index>(f, "fold_id", context);
        spec.selected_label_indices = index_list(f, "selected_label_indices", context);
        spec.train_record_ids = index_list(f, "train_record_ids", context);
        spec.test_record_ids = index_list(f, "test_record_ids", context);
        folds.push_back(std::move(spec));
    }
    return folds;
}

Json to_json(const SynthConfig& config)
{
    const auto& w = config.world;
    Json checkpoints = Json::array();
    for (const auto& c : config.checkpoints)
        checkpoints.push_back(Json{{"checkpoint_id", c.checkpoint_id},
                                   {"source_label_count", c.source_label_count},
                                   {"alignment", c.alignment},
                                   {"noise_sigma", c.noise_sigma},
                                   {"gain", c.gain},
                                   {"seed", c.seed}});
    return Json{{"schema_version", schema_version},
                {"name", config.name},
                {"world", Json{{"latent_dim", w.latent_dim},
                               {"label_rank", w.label_rank},
                               {"record_count", w.record_count},
                               {"label_count", w.label_count},
                               {"prevalence_min", w.prevalence_min},
                               {"prevalence_max", w.prevalence_max},
                               {"seed", w.seed},
                               {"max_retries", w.max_retries}}},
                {"checkpoints", checkpoints}};
}

SynthConfig synth_config_from_json(const Json& j)
{
    const std::string context = "synth config";
    if (!j.is_object()) schema_error(context, "expected a JSON object");
    reject_unknown_keys(j, {"schema_version", "name", "world", "checkpoints"}, context);
    if (j.contains("schema_version")) check_schema_version(j, context);

    SynthConfig config;
    read_optional(j, "name", context, config.name);

    const Json& w = field(j, "world", context);
    const std::string world_context = context + " world";
    reject_unknown_keys(w,
                        {"latent_dim", "label_rank", "record_count", "label_count", "prevalence_min",
                         "prevalence_max", "seed", "max_retries"},
                        world_context);
    read_optional(w, "latent_dim", world_context, config.world.latent_dim);
    read_optional(w, "label_rank", world_context, config.world.label_rank);
    read_optional(w, "record_count", world_context, config.world.record_count);
    read_optional(w, "label_count", world_context, config.world.label_count);
    read_optional(w, "prevalence_min", world_context, config.world.prevalence_min);
    read_optional(w, "prevalence_max", world_context, config.world.prevalence_max);
    read_optional(w, "seed", world_context, config.world.seed);
    read_optional(w, "max_retries", world_context, config.world.max_retries);
    config.world.validate();

    const Json& list = field(j, "checkpoints", context);
    if (!list.is_array() || list.empty()) schema_error(context, "`checkpoints` must be a non-empty array");
    std::set<std::string> ids;
    for (std::size_t k = 0; k < list.size(); ++k) {
        const Json& c = list[k];
        const std::string ckpt_context = context + " checkpoints[" + std::to_string(k) + "]";
        reject_unknown_keys(c, {"checkpoint_id", "source_label_count", "alignment", "noise_sigma", "gain", "seed"},
                            ckpt_context);
        CheckpointConfig ckpt;
        ckpt.checkpoint_id = get_as<std::string>(c, "checkpoint_id", ckpt_context);
        read_optional(c, "source_label_count", ckpt_context, ckpt.source_label_count);
        read_optional(c, "alignment", ckpt_context, ckpt.alignment);
        read_optional(c, "noise_sigma", ckpt_context, ckpt.noise_sigma);
        read_optional(c, "gain", ckpt_context, ckpt.gain);
        read_optional(c, "seed", ckpt_context, ckpt.seed);
        ckpt.validate();
        // The id becomes part of a file name.
        const bool safe = std::all_of(ckpt.checkpoint_id.begin(), ckpt.checkpoint_id.end(), [](unsigned char ch) {
            return std::isalnum(ch) || ch == '_' || ch == '-' || ch == '.';
        });
        if (!safe || ckpt.checkpoint_id.front() == '.')
            schema_error(ckpt_context, "checkpoint_id may only contain letters, digits, '_', '-' and '.'");
        if (!ids.insert(ckpt.checkpoint_id).second)
            schema_error(ckpt_context, "duplicate checkpoint_id `" + ckpt.checkpoint_id + "`");
        config.checkpoints.push_back(std::move(ckpt));
    }
    return config;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

Json to_json(const MelepReport<double>& report, const std::vector<std::string>& target_label_names,
             const std::vector<std::string>& source_label_names)
{
    Json phi = Json::array();
    for (Index y = 0; y < report.phi.rows(); ++y) {
        Json row = Json::array();
        for (Index z = 0; z < report.phi.cols(); ++z) row.push_back(report.phi(y, z));
        phi.push_back(row);
    }
    Json per_label = Json::array();
    Json weights = Json::array();
    for (Index y = 0; y < report.per_label.size(); ++y) {
        per_label.push_back(report.per_label(y));
        weights.push_back(report.weights.weights(y));
    }
    Json out{{"schema_version", schema_version},
             {"melep", report.melep},
             {"phi", phi},
             {"per_label", per_label},
             {"weights", Json{{"weights", weights},
                              {"positive_counts", report.weights.positive_counts},
                              {"negative_counts", report.weights.negative_counts}}},
             {"clamp_events", report.clamp_events},
             {"target_label_names", target_label_names},
             {"source_label_names", source_label_names}};
    if (report.source_weighted_melep) out["source_weighted_melep"] = *report.source_weighted_melep;
    return out;
}

Json to_json(const ResultReport& report)
{
    Json folds = Json::array();
    for (const auto& f : report.folds) {
        Json record{{"fold_id", f.fold_id},
                    {"checkpoint_id", f.checkpoint_id},
                    {"melep", f.melep},
                    {"clamp_events", f.clamp_events}};
        if (f.weighted_f1) record["weighted_f1"] = *f.weighted_f1;
        folds.push_back(record);
    }
    Json per_checkpoint = Json::array();
    for (const auto& c : report.per_checkpoint)
        per_checkpoint.push_back(Json{{"checkpoint_id", c.checkpoint_id}, {"pearson", to_json(c.pearson)}});

    Json out{{"schema_version", report.schema_version},
             {"generator", report.generator},
             {"seed", report.seed},
             {"f1_source", report.f1_source},
             {"folds", folds},
             {"per_checkpoint", per_checkpoint}};
    if (report.aggregate) {
        const auto& a = *report.aggregate;
        Json means = Json::array();
        for (const auto& m : a.binning.bin_mean_f1) means.push_back(optional_number(m));
        out["aggregate"] = Json{{"pearson", to_json(a.pearson)},
                                {"binning", Json{{"mode", to_string(a.binning_mode)},
                                                 {"bin_edges", a.binning.bin_edges},
                                                 {"bin_mean_f1", means},
                                                 {"bin_counts", a.binning.bin_counts}}}};
    }
    return out;
}

ResultReport result_report_from_json(const Json& j)
{
    const std::string context = "result report";
    check_schema_version(j, context);
    ResultReport report;
    report.generator = get_as<std::string>(j, "generator", context);
    report.seed = get_as<std::uint64_t>(j, "seed", context);
    report.f1_source = get_as<std::string>(j, "f1_source", context);

    const Json& folds = field(j, "folds", context);
    if (!folds.is_array()) schema_error(context, "`folds` must be an array");
    for (const auto& f : folds) {
        FoldRecord record;
        record.fold_id = get_as<Index>(f, "fold_id", context);
        record.checkpoint_id = get_as<std::string>(f, "checkpoint_id", context);
        record.melep = get_as<double>(f, "melep", context);
        record.clamp_events = get_as<Index>(f, "clamp_events", context);
        if (f.contains("weighted_f1")) record.weighted_f1 = get_as<double>(f, "weighted_f1", context);
        report.folds.push_back(std::move(record));
    }
    if (j.contains("per_checkpoint"))
        for (const auto& c : field(j, "per_checkpoint", context))
            report.per_checkpoint.push_back({get_as<std::string>(c, "checkpoint_id", context),
                                             correlation_from_json(field(c, "pearson", context), context)});
    if (j.contains("aggregate")) {
        const Json& a = field(j, "aggregate", context);
        StudyAggregate aggregate;
        aggregate.pearson = correlation_from_json(field(a, "pearson", context), context);
        const Json& b = field(a, "binning", context);
        aggregate.binning_mode = binning_mode_from_string(get_as<std::string>(b, "mode", context));
        const Json& edges = field(b, "bin_edges", context);
        const Json& means = field(b, "bin_mean_f1", context);
        const Json& counts = field(b, "bin_counts", context);
        if (edges.size() != 5 || means.size() != 4 || counts.size() != 4)
            schema_error(context, "binning must have 5 edges, 4 means and 4 counts");
        for (std::size_t k = 0; k < 5; ++k) aggregate.binning.bin_edges[k] = edges[k].get<double>();
        for (std::size_t k = 0; k < 4; ++k) {
            if (!means[k].is_null()) aggregate.binning.bin_mean_f1[k] = means[k].get<double>();
            aggregate.binning.bin_counts[k] = counts[k].get<Index>();
        }
        report.aggregate = aggregate;
    }
    return report;
}

void write_report(const ResultReport& report, const fs::path& path)
{
    write_json(to_json(report), path);
}

ResultReport read_report(const fs::path& path)
{
    try {
        return result_report_from_json(read_json(path));
    } catch (const ParseError& e) {
        if (e.path() == path.string()) throw;
        throw ParseError(e.kind(), path.string(), 0, 0, e.what());
    }
}

} // namespace melep::io
