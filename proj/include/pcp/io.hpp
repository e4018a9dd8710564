#pragma once

#include "pcp/em.hpp"
#include "pcp/experiments.hpp"
#include "pcp/fisher.hpp"
#include "pcp/kruskal.hpp"
#include "pcp/rank_one.hpp"
#include "pcp/tensor.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace pcp {

using nlohmann::json;

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw IoError(path + ": " + e.what());
    }
    return j;
}

inline void save_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << j.dump(2) << "\n";
}

} // namespace detail

/// Tensor file format: {"dims":[...],"data":[flat values, natural ordering]}.
/// With require_counts, entries must be non-negative integers.
inline DenseTensor read_tensor_json(const std::string& path, bool require_counts) {
    const json j = detail::load_json(path);
    if (!j.contains("dims") || !j.contains("data"))
        throw IoError(path + ": expected fields \"dims\" and \"data\"");
    std::vector<int> dims;
    try {
        dims = j.at("dims").get<std::vector<int>>();
    } catch (const json::exception& e) {
        throw IoError(path + ": field \"dims\": " + e.what());
    }
    std::vector<double> data;
    try {
        data = j.at("data").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw IoError(path + ": field \"data\": " + e.what());
    }
    if (require_counts) {
        for (std::size_t i = 0; i < data.size(); ++i)
            if (data[i] < 0.0 || data[i] != std::floor(data[i]))
                throw IoError(path + ": field \"data\", entry " + std::to_string(i) +
                              ": counts must be non-negative integers");
    }
    try {
        return DenseTensor(std::move(dims), std::move(data));
    } catch (const std::exception& e) {
        throw IoError(path + ": " + e.what());
    }
}

inline void write_tensor_json(const std::string& path, const DenseTensor& t) {
    detail::save_json(path, json{{"dims", t.dims()}, {"data", t.data()}});
}

/// Model file format:
/// {"dims":[...],"rank":R,"factors":[[column-major floats per factor], ...]}.
inline KruskalModel read_model_json(const std::string& path) {
    const json j = detail::load_json(path);
    for (const char* field : {"dims", "rank", "factors"})
        if (!j.contains(field))
            throw IoError(path + ": missing field \"" + field + "\"");
    std::vector<int> dims;
    int rank = 0;
    std::vector<std::vector<double>> raw;
    try {
        dims = j.at("dims").get<std::vector<int>>();
        rank = j.at("rank").get<int>();
        raw = j.at("factors").get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    if (raw.size() != dims.size())
        throw IoError(path + ": factor count does not match dims");
    std::vector<Matrix> factors;
    for (std::size_t p = 0; p < raw.size(); ++p) {
        const Eigen::Index n = dims[p];
        if (static_cast<Eigen::Index>(raw[p].size()) != n * rank)
            throw IoError(path + ": factor " + std::to_string(p) + " has " +
                          std::to_string(raw[p].size()) + " entries, expected " +
                          std::to_string(n * rank));
        factors.emplace_back(Eigen::Map<const Matrix>(raw[p].data(), n, rank));
    }
    try {
        return KruskalModel(std::move(factors));
    } catch (const std::exception& e) {
        throw IoError(path + ": " + e.what());
    }
}

inline void write_model_json(const std::string& path, const KruskalModel& m) {
    json factors = json::array();
    for (const Matrix& a : m.factors())
        factors.push_back(std::vector<double>(a.data(), a.data() + a.size()));
    detail::save_json(path, json{{"dims", m.dims()}, {"rank", m.rank()}, {"factors", factors}});
}

inline void write_trace_csv(const std::string& path, const FitTrace& trace) {
    std::ofstream out(path);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "iteration,loglik,delta,seconds\n";
    out << std::setprecision(17);
    for (const auto& row : trace.rows)
        out << row.iteration << ',' << row.loglik << ',' << row.max_rel_change << ','
            << row.seconds << '\n';
}

inline void write_eigenvalues_csv(const std::string& path, const Vector& eigenvalues) {
    std::ofstream out(path);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "index,eigenvalue\n";
    out << std::setprecision(17);
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
        out << i << ',' << eigenvalues[i] << '\n';
}

inline void write_experiment_csv(const std::string& path, std::vector<ExperimentRow> rows) {
    // sorted before writing so parallel execution order never shows
    std::sort(rows.begin(), rows.end(), [](const ExperimentRow& a, const ExperimentRow& b) {
        return std::tie(a.experiment, a.p, a.n, a.r, a.s, a.k, a.rep, a.metric) <
               std::tie(b.experiment, b.p, b.n, b.r, b.s, b.k, b.rep, b.metric);
    });
    std::ofstream out(path);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "experiment,P,N,R,S,K,rep,metric,value,seconds\n";
    out << std::setprecision(17);
    for (const auto& r : rows)
        out << r.experiment << ',' << r.p << ',' << r.n << ',' << r.r << ',' << r.s << ','
            << r.k << ',' << r.rep << ',' << r.metric << ',' << r.value << ',' << r.seconds
            << '\n';
}

inline json rank_verdict_json(const RankVerdict& v, FimKind kind) {
    return json{{"order", v.order},
                {"kind", kind == FimKind::observed ? "observed" : "expected"},
                {"numerical_rank", v.numerical_rank},
                {"conjectured_rank", v.conjectured_rank},
                {"L", v.l_value},
                {"lambda_max", v.lambda_max},
                {"threshold", v.threshold}};
}

inline json identifiability_report_json(const IdentifiabilityReport& rep) {
    return json{{"r", rep.r},
                {"numerical_rank", rep.numerical_rank},
                {"schur_residual", rep.schur_residual},
                {"nullspace_residual", rep.nullspace_residual}};
}

inline void write_fim_json(const std::string& path, const FisherMatrix& f) {
    std::vector<double> data(f.m.data(), f.m.data() + f.m.size());
    detail::save_json(path, json{{"order", f.m.rows()},
                                 {"kind", f.kind == FimKind::observed ? "observed" : "expected"},
                                 {"dims", f.dims},
                                 {"rank", f.rank},
                                 {"data_column_major", data}});
}

/// One manifest is written alongside the outputs of every CLI run.
struct RunManifest {
    std::string command;
    json config;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    double wall_seconds = 0.0;
};

inline void write_manifest(const std::string& path, const RunManifest& m) {
    detail::save_json(path, json{{"command", m.command},
                                 {"config", m.config},
                                 {"seed", m.seed},
                                 {"version", "pcpfit 0.1.0"},
                                 {"inputs", m.inputs},
                                 {"outputs", m.outputs},
                                 {"wall_seconds", m.wall_seconds}});
}

} // namespace pcp
