#include "netident/io.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace netident {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return in;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

}  // namespace

void save_edge_list_csv(const WeightedGraph& g, const std::string& path) {
    auto out = open_out(path);
    out << "i,j,weight\n";
    for (const auto& e : g.edges())
        out << e.i << ',' << e.j << ',' << format_double(e.weight) << '\n';
}

WeightedGraph load_edge_list_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("i,j,weight", 0) != 0)
        throw std::runtime_error("edge list CSV: missing `i,j,weight` header in " + path);
    std::vector<Edge> edges;
    int max_node = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != 3)
            throw std::runtime_error("edge list CSV: malformed row `" + line + "`");
        Edge e{std::stoi(fields[0]), std::stoi(fields[1]), std::stod(fields[2])};
        max_node = std::max({max_node, e.i, e.j});
        edges.push_back(e);
    }
    return WeightedGraph(max_node + 1, std::move(edges));
}

void save_adjacency_csv(const WeightedGraph& g, const std::string& path) {
    auto out = open_out(path);
    Eigen::MatrixXd adj = adjacency_matrix(g);
    for (Eigen::Index r = 0; r < adj.rows(); ++r) {
        for (Eigen::Index c = 0; c < adj.cols(); ++c) {
            if (c) out << ',';
            out << format_double(adj(r, c));
        }
        out << '\n';
    }
}

void save_probe_log(const ProbeLog& log, const std::string& csv_path,
                    const std::string& json_path) {
    const Eigen::Index n = log.y0.size();
    {
        auto out = open_out(csv_path);
        out << "probe_index";
        for (Eigen::Index i = 0; i < n; ++i) out << ",dw_" << (i + 1);
        for (Eigen::Index i = 0; i < n; ++i) out << ",dy_" << (i + 1);
        out << '\n';
        for (std::size_t k = 0; k < log.records.size(); ++k) {
            out << k;
            for (Eigen::Index i = 0; i < n; ++i)
                out << ',' << format_double(log.records[k].delta_w[i]);
            for (Eigen::Index i = 0; i < n; ++i)
                out << ',' << format_double(log.records[k].delta_y[i]);
            out << '\n';
        }
    }
    nlohmann::ordered_json header;
    header["branch"] = to_string(log.branch);
    header["kappa"] = log.kappa;
    header["seed"] = log.seed;
    header["n"] = n;
    header["w0"] = std::vector<double>(log.w0.data(), log.w0.data() + log.w0.size());
    header["y0"] = std::vector<double>(log.y0.data(), log.y0.data() + log.y0.size());
    header["gains"] = std::vector<double>(log.gains.data(), log.gains.data() + log.gains.size());
    std::vector<bool> synthetic;
    for (const auto& r : log.records) synthetic.push_back(r.synthetic);
    header["synthetic"] = synthetic;
    header["segment_residuals"] = log.segment_residuals;
    open_out(json_path) << header.dump(2) << '\n';
}

ProbeLog load_probe_log(const std::string& csv_path, const std::string& json_path) {
    nlohmann::json header;
    open_in(json_path) >> header;

    ProbeLog log;
    log.branch = branch_from_string(header.at("branch").get<std::string>());
    log.kappa = header.at("kappa").get<double>();
    log.seed = header.at("seed").get<std::uint64_t>();
    const Eigen::Index n = header.at("n").get<Eigen::Index>();
    auto to_vec = [](const nlohmann::json& arr) {
        Eigen::VectorXd v(arr.size());
        for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
        return v;
    };
    log.w0 = to_vec(header.at("w0"));
    log.y0 = to_vec(header.at("y0"));
    log.gains = to_vec(header.at("gains"));
    log.segment_residuals = header.at("segment_residuals").get<std::vector<double>>();
    const auto synthetic = header.at("synthetic").get<std::vector<bool>>();

    auto in = open_in(csv_path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("probe_index", 0) != 0)
        throw std::runtime_error("probe CSV: missing header in " + csv_path);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (static_cast<Eigen::Index>(fields.size()) != 1 + 2 * n)
            throw std::runtime_error("probe CSV: malformed row `" + line + "`");
        ProbeRecord rec;
        rec.delta_w.resize(n);
        rec.delta_y.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) rec.delta_w[i] = std::stod(fields[1 + i]);
        for (Eigen::Index i = 0; i < n; ++i) rec.delta_y[i] = std::stod(fields[1 + n + i]);
        log.records.push_back(std::move(rec));
    }
    if (log.records.size() != synthetic.size())
        throw std::runtime_error("probe log: CSV row count does not match JSON header");
    for (std::size_t k = 0; k < synthetic.size(); ++k) log.records[k].synthetic = synthetic[k];
    return log;
}

void save_edge_errors_csv(const GraphComparison& cmp, const std::string& path) {
    auto out = open_out(path);
    out << "i,j,nu_true,p_est,abs_err,rel_err\n";
    for (const auto& e : cmp.per_edge)
        out << e.i << ',' << e.j << ',' << format_double(e.nu_true) << ','
            << format_double(e.p_est) << ',' << format_double(e.abs_err) << ','
            << format_double(e.rel_err) << '\n';
}

CsvTrajectoryWriter::CsvTrajectoryWriter(const std::string& path, int n) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path);
    out_ << "t";
    for (int i = 0; i < n; ++i) out_ << ",x_" << (i + 1);
    for (int i = 0; i < n; ++i) out_ << ",y_" << (i + 1);
    out_ << '\n';
}

void CsvTrajectoryWriter::record(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    out_ << format_double(t);
    for (Eigen::Index i = 0; i < x.size(); ++i) out_ << ',' << format_double(x[i]);
    for (Eigen::Index i = 0; i < y.size(); ++i) out_ << ',' << format_double(y[i]);
    out_ << '\n';
}

}  // namespace netident
