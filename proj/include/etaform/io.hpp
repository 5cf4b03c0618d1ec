// JSON serialization: frames documents, family charts/surfaces, run reports.
// Complex scalars are [re, im] pairs; matrices are row-major nested arrays.
#pragma once

#include "etaform/families.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace etaform {

using Json = nlohmann::json;

inline Json complex_to_json(const Complex& z) { return Json::array({z.real(), z.imag()}); }

inline Complex json_to_complex(const Json& j) {
    if (!j.is_array() || j.size() != 2) {
        throw ContractViolationError("json: complex scalar must be a [re, im] pair");
    }
    return Complex(j[0].get<double>(), j[1].get<double>());
}

inline Json matrix_to_json(const CMatrix& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline CMatrix json_to_matrix(const Json& j) {
    if (!j.is_array() || j.empty()) throw ContractViolationError("json: matrix must be a nested array");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
    CMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(r)].size()) != cols) {
            throw ContractViolationError("json: ragged matrix rows");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = json_to_complex(j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Frames document: {dim, I, frames: {L0, L1, L2?}}.

struct FramesDocument {
    SymplecticSpace space;
    std::vector<LagrangianFrame> frames;  // L0, L1 and optionally L2
};

struct FrameValidation {
    double orthonormality = 0.0;
    double lagrangian = 0.0;
};

inline FramesDocument parse_frames_document(const Json& j, std::vector<FrameValidation>* report = nullptr) {
    if (!j.contains("dim") || !j.contains("I") || !j.contains("frames")) {
        throw ContractViolationError("frames document: required keys dim, I, frames");
    }
    FramesDocument doc;
    const int dim = j.at("dim").get<int>();
    const CMatrix I = json_to_matrix(j.at("I"));
    if (I.rows() != dim || I.cols() != dim) {
        throw ContractViolationError("frames document: I has wrong shape");
    }
    doc.space = space_from_structure(I);
    const Json& frames = j.at("frames");
    for (const char* name : {"L0", "L1", "L2"}) {
        if (!frames.contains(name)) {
            if (std::string(name) == "L2") break;
            throw ContractViolationError(std::string("frames document: missing frame ") + name);
        }
        LagrangianFrame f{json_to_matrix(frames.at(name))};
        if (f.F.rows() != dim || f.F.cols() != dim / 2) {
            throw ContractViolationError(std::string("frames document: frame ") + name +
                                         " has wrong shape");
        }
        FrameValidation val;
        val.orthonormality = frob(f.F.adjoint() * f.F - CMatrix::Identity(dim / 2, dim / 2));
        val.lagrangian = lagrangian_residual(doc.space, f.F);
        if (report) report->push_back(val);
        if (val.orthonormality > 1e-8) {
            throw ContractViolationError(std::string("frames document: frame ") + name +
                                         " is not orthonormal (residual " +
                                         std::to_string(val.orthonormality) + ")");
        }
        if (val.lagrangian > 1e-7) {
            throw ContractViolationError(std::string("frames document: frame ") + name +
                                         " is not Lagrangian (residual " +
                                         std::to_string(val.lagrangian) + ")");
        }
        doc.frames.push_back(std::move(f));
    }
    return doc;
}

inline Json frames_document_to_json(const SymplecticSpace& space,
                                    const std::vector<LagrangianFrame>& frames) {
    Json j;
    j["dim"] = space.dim();
    j["I"] = matrix_to_json(space.I);
    Json f;
    const char* names[3] = {"L0", "L1", "L2"};
    for (std::size_t k = 0; k < frames.size() && k < 3; ++k) {
        f[names[k]] = matrix_to_json(frames[k].F);
    }
    j["frames"] = std::move(f);
    return j;
}

// ---------------------------------------------------------------------------
// Family documents.

inline Json family_to_json(const FamilyChart& chart) {
    Json j;
    j["kind"] = "chart";
    j["dim"] = chart.dim;
    j["shape"] = std::vector<int>(chart.shape.begin(), chart.shape.begin() + chart.dim);
    j["h"] = std::vector<double>(chart.step.begin(), chart.step.begin() + chart.dim);
    j["basepoint"] = std::vector<int>(chart.basepoint.begin(), chart.basepoint.begin() + chart.dim);
    j["I"] = matrix_to_json(chart.space.I);
    j["frames_per_vertex"] = chart.frames_per_vertex;
    Json frames = Json::array();
    for (const auto& sample : chart.samples) {
        Json vertex = Json::array();
        for (const auto& f : sample) vertex.push_back(matrix_to_json(f.F));
        frames.push_back(std::move(vertex));
    }
    j["frames"] = std::move(frames);
    return j;
}

inline Json family_to_json(const SurfaceFamily& surface) {
    Json j;
    j["kind"] = "sphere";
    j["dim"] = 2;
    j["shape"] = std::vector<int>{surface.ntheta, surface.nphi};
    j["I"] = matrix_to_json(surface.space.I);
    j["frames_per_vertex"] = surface.frames_per_vertex;
    Json frames = Json::array();
    for (const auto& sample : surface.samples) {
        Json vertex = Json::array();
        for (const auto& f : sample) vertex.push_back(matrix_to_json(f.F));
        frames.push_back(std::move(vertex));
    }
    j["frames"] = std::move(frames);
    return j;
}

inline std::vector<std::vector<LagrangianFrame>> parse_family_frames(const Json& j,
                                                                     const SymplecticSpace& space,
                                                                     std::size_t expected_vertices,
                                                                     int frames_per_vertex) {
    const Json& frames = j.at("frames");
    if (frames.size() != expected_vertices) {
        throw ContractViolationError("family document: vertex count mismatch");
    }
    std::vector<std::vector<LagrangianFrame>> samples(expected_vertices);
    for (std::size_t v = 0; v < expected_vertices; ++v) {
        const Json& vertex = frames[v];
        if (static_cast<int>(vertex.size()) != frames_per_vertex) {
            throw ContractViolationError("family document: frames-per-vertex mismatch");
        }
        for (const auto& fj : vertex) {
            LagrangianFrame f{json_to_matrix(fj)};
            if (lagrangian_residual(space, f.F) > 1e-7) {
                throw ContractViolationError("family document: non-Lagrangian frame");
            }
            samples[v].push_back(std::move(f));
        }
    }
    return samples;
}

struct ParsedFamily {
    bool is_surface = false;
    FamilyChart chart;
    SurfaceFamily surface;
};

inline ParsedFamily family_from_json(const Json& j) {
    ParsedFamily out;
    const std::string kind = j.at("kind").get<std::string>();
    const CMatrix I = json_to_matrix(j.at("I"));
    if (kind == "chart") {
        FamilyChart chart;
        chart.dim = j.at("dim").get<int>();
        const auto shape = j.at("shape").get<std::vector<int>>();
        const auto h = j.at("h").get<std::vector<double>>();
        const auto bp = j.at("basepoint").get<std::vector<int>>();
        if (static_cast<int>(shape.size()) != chart.dim || static_cast<int>(h.size()) != chart.dim ||
            static_cast<int>(bp.size()) != chart.dim) {
            throw ContractViolationError("family document: dim/shape mismatch");
        }
        for (int a = 0; a < chart.dim; ++a) {
            chart.shape[static_cast<std::size_t>(a)] = shape[static_cast<std::size_t>(a)];
            chart.step[static_cast<std::size_t>(a)] = h[static_cast<std::size_t>(a)];
            chart.basepoint[static_cast<std::size_t>(a)] = bp[static_cast<std::size_t>(a)];
        }
        chart.space = space_from_structure(I);
        chart.frames_per_vertex = j.at("frames_per_vertex").get<int>();
        chart.samples =
            parse_family_frames(j, chart.space, chart.vertex_count(), chart.frames_per_vertex);
        out.chart = std::move(chart);
        out.is_surface = false;
    } else if (kind == "sphere") {
        SurfaceFamily surface;
        const auto shape = j.at("shape").get<std::vector<int>>();
        if (shape.size() != 2) throw ContractViolationError("family document: sphere shape");
        surface.ntheta = shape[0];
        surface.nphi = shape[1];
        surface.space = space_from_structure(I);
        surface.frames_per_vertex = j.at("frames_per_vertex").get<int>();
        surface.samples =
            parse_family_frames(j, surface.space, surface.vertex_count(), surface.frames_per_vertex);
        out.surface = std::move(surface);
        out.is_surface = true;
    } else {
        throw ContractViolationError("family document: unknown kind");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Run reports.

inline Json tolerances_to_json() {
    const Tolerances& t = tolerances();
    return Json{{"hermiticity", t.hermiticity},
                {"eig_reconstruction", t.eig_reconstruction},
                {"unitary", t.unitary},
                {"branch_cut_margin", t.branch_cut_margin},
                {"gauge_branch_margin", t.gauge_branch_margin},
                {"transversality", t.transversality},
                {"lagrangian_residual", t.lagrangian_residual},
                {"subspace_match", t.subspace_match},
                {"divided_difference", t.divided_difference},
                {"signature_rel", t.signature_rel},
                {"chern_rounding", t.chern_rounding},
                {"plaquette_phase", t.plaquette_phase},
                {"pf_fit_rel", t.pf_fit_rel}};
}

struct RunReport {
    std::string command;
    std::string input_digest;
    Json results = Json::object();
    Json diagnostics = Json::object();
    std::uint64_t seed = 0;

    Json to_json() const {
        return Json{{"command", command},
                    {"input_digest", input_digest},
                    {"results", results},
                    {"diagnostics", diagnostics},
                    {"tolerances", tolerances_to_json()},
                    {"versions", Json{{"etaform", "0.1.0"}}},
                    {"seed", seed}};
    }
};

inline std::string digest_hex(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContractViolationError("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ContractViolationError("cannot write file: " + path);
    out << content;
}

}  // namespace etaform
