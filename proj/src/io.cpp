#include "fragcov/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace fragcov {

namespace {

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << std::setprecision(17);
    return out;
}

std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return in;
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string trim(std::string s)
{
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

double parse_double(const std::string& text, std::size_t line)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (trim(text.substr(used)).empty() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw Error("line " + std::to_string(line) + ": malformed number '" + text + "'");
}

} // namespace

void write_fragments_csv(std::ostream& out, const FragmentSample& sample)
{
    const auto old = out.precision(17);
    out << "curve_id,t,value\n";
    for (const Curve& c : sample.curves)
        for (std::size_t a = 0; a < c.times.size(); ++a) out << c.id << ',' << c.times[a] << ',' << c.values[a] << '\n';
    out.precision(old);
}

void write_fragments_csv(const std::string& path, const FragmentSample& sample)
{
    auto out = open_out(path);
    write_fragments_csv(out, sample);
}

std::string sidecar_json(const FragmentSample& sample)
{
    nlohmann::ordered_json j;
    j["n"] = sample.n();
    j["grid_type"] = to_string(sample.grid_type);
    j["noise_sd"] = sample.noise_sd;
    auto& iv = j["intervals"] = nlohmann::ordered_json::array();
    for (const Interval& i : sample.intervals) iv.push_back({{"start", i.start}, {"delta", i.delta}});
    if (sample.grid) j["grid"] = sample.grid->points();
    return j.dump(2);
}

void write_sidecar(const std::string& path, const FragmentSample& sample)
{
    auto out = open_out(path);
    out << sidecar_json(sample) << '\n';
}

std::string sidecar_path_for(const std::string& csv_path)
{
    const auto dot = csv_path.rfind(".csv");
    if (dot != std::string::npos && dot + 4 == csv_path.size()) return csv_path.substr(0, dot) + ".json";
    return csv_path + ".json";
}

std::string read_text_file(const std::string& path)
{
    auto in = open_in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

IngestResult ingest_fragments(std::istream& csv, const std::optional<std::string>& sidecar_text)
{
    IngestResult result;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(csv, line)) throw Error("empty fragment file");
    ++line_no;
    std::vector<std::string> header = split(trim(line), ',');
    for (auto& h : header) h = trim(h);
    if (header != std::vector<std::string>{"curve_id", "t", "value"})
        throw Error("line 1: expected header curve_id,t,value");

    std::map<std::string, Curve> by_id;  // keeps first-seen id order below
    std::vector<std::string> order;
    while (std::getline(csv, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 3) throw Error("line " + std::to_string(line_no) + ": expected 3 fields");
        const std::string id = trim(fields[0]);
        if (id.empty()) throw Error("line " + std::to_string(line_no) + ": empty curve_id");
        const double t = parse_double(fields[1], line_no);
        const double v = parse_double(fields[2], line_no);
        if (t < 0.0 || t > 1.0) throw Error("line " + std::to_string(line_no) + ": t outside [0,1]");
        auto [it, inserted] = by_id.try_emplace(id);
        if (inserted) order.push_back(id);
        it->second.times.push_back(t);
        it->second.values.push_back(v);
    }

    std::optional<nlohmann::json> side;
    if (sidecar_text) side = nlohmann::json::parse(*sidecar_text);

    FragmentSample& sample = result.sample;
    std::vector<std::size_t> kept_positions;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        Curve c = std::move(by_id[order[pos]]);
        if (c.times.size() < 2) {
            result.warnings.push_back("curve " + order[pos] + " has fewer than 2 points; dropped");
            continue;
        }
        std::vector<std::size_t> idx(c.times.size());
        for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return c.times[a] < c.times[b]; });
        Curve sorted;
        try {
            sorted.id = std::stoi(order[pos]);
        } catch (const std::exception&) {
            sorted.id = static_cast<int>(pos) + 1;
        }
        for (std::size_t k : idx) {
            sorted.times.push_back(c.times[k]);
            sorted.values.push_back(c.values[k]);
        }
        sample.curves.push_back(std::move(sorted));
        kept_positions.push_back(pos);
    }
    if (sample.curves.empty()) throw Error("no usable curves in fragment file");

    std::set<double> distinct;
    for (const Curve& c : sample.curves) distinct.insert(c.times.begin(), c.times.end());

    if (side) {
        sample.grid_type = parse_grid_type(side->value("grid_type", std::string("common")));
        sample.noise_sd = side->value("noise_sd", 0.0);
        if (side->contains("intervals")) {
            const auto& iv = (*side)["intervals"];
            if (iv.size() != order.size()) throw Error("sidecar interval count does not match curve count");
            for (std::size_t pos : kept_positions)
                sample.intervals.push_back({iv[pos].at("start").get<double>(), iv[pos].at("delta").get<double>()});
        }
        if (side->contains("grid")) sample.grid = Grid::from_points((*side)["grid"].get<std::vector<double>>());
    } else {
        // Without metadata, a small shared set of times marks the common regime.
        const bool shared = distinct.size() * 2 <= sample.observation_count();
        sample.grid_type = shared ? GridType::Common : GridType::Type2;
    }
    if (sample.intervals.empty())
        for (const Curve& c : sample.curves) sample.intervals.push_back({c.times.front(), c.times.back() - c.times.front()});

    if (sample.grid_type != GridType::Type2 && !sample.grid)
        sample.grid = Grid::from_points(std::vector<double>(distinct.begin(), distinct.end()));
    if (sample.grid) {
        const auto& pts = sample.grid->points();
        for (Curve& c : sample.curves) {
            c.grid_index.clear();
            for (double t : c.times) {
                const auto it = std::lower_bound(pts.begin(), pts.end(), t);
                if (it == pts.end() || *it != t) throw Error("observation time not on the declared grid");
                c.grid_index.push_back(static_cast<int>(it - pts.begin()));
            }
        }
    }
    return result;
}

IngestResult ingest_fragments(const std::string& csv_path, const std::optional<std::string>& sidecar_path)
{
    auto in = open_in(csv_path);
    std::optional<std::string> text;
    if (sidecar_path) text = read_text_file(*sidecar_path);
    return ingest_fragments(in, text);
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m)
{
    const auto old = out.precision(17);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
        out << '\n';
    }
    out.precision(old);
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m)
{
    auto out = open_out(path);
    write_matrix_csv(out, m);
}

void write_counts_csv(const std::string& path, const Eigen::MatrixXi& m)
{
    auto out = open_out(path);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
        out << '\n';
    }
}

Eigen::MatrixXd read_matrix_csv(std::istream& in)
{
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<double> row;
        for (const auto& f : split(line, ',')) row.push_back(parse_double(f, line_no));
        if (!rows.empty() && row.size() != rows.front().size())
            throw Error("line " + std::to_string(line_no) + ": ragged matrix row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error("empty matrix file");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return m;
}

Eigen::MatrixXd read_matrix_csv(const std::string& path)
{
    auto in = open_in(path);
    return read_matrix_csv(in);
}

Eigen::MatrixXi read_counts_csv(const std::string& path)
{
    const Eigen::MatrixXd m = read_matrix_csv(path);
    if ((m.array() != m.array().round()).any() || (m.array() < 0).any())
        throw Error("counts must be nonnegative integers");
    return m.cast<int>();
}

void write_scree_csv(std::ostream& out, const RankSweepResult& sweep)
{
    const auto old = out.precision(17);
    out << "rank,fit,normalized_fit\n";
    for (int i = 0; i < sweep.max_rank(); ++i)
        out << i + 1 << ',' << sweep.fits[static_cast<std::size_t>(i)] << ','
            << sweep.normalized_fits[static_cast<std::size_t>(i)] << '\n';
    out.precision(old);
}

void write_scree_csv(const std::string& path, const RankSweepResult& sweep)
{
    auto out = open_out(path);
    write_scree_csv(out, sweep);
}

} // namespace fragcov
