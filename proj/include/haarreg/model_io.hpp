#pragma once

#include "haarreg/error.hpp"
#include "haarreg/estimator.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <string>

namespace haarreg {

/// Serialises the selected part of a model: enough to rebuild predict exactly.
inline nlohmann::json model_to_json(const ThresholdedModel& model) {
    const auto& basis = model.basis();
    const auto& domain = basis.domain();
    nlohmann::json functions = nlohmann::json::array();
    for (auto j : model.selected()) {
        const auto& f = basis[j];
        functions.push_back({
            {"kind", f.kind == WaveletKind::Father ? "father" : "mother"},
            {"level", f.home.level},
            {"gamma", f.home.gamma},
            {"v", f.v},
            {"values", f.values},
            {"coefficient", model.coefficients()[j]},
        });
    }
    nlohmann::json beta = std::isfinite(model.beta()) ? nlohmann::json(model.beta()) : nlohmann::json(nullptr);
    return {
        {"format", "haarreg-model"},
        {"version", 1},
        {"lambda", model.lambda()},
        {"beta", beta},
        {"j0", domain.j0},
        {"j1", domain.j1},
        {"w", domain.w},
        {"d", domain.d},
        {"n", basis.n()},
        {"functions", functions},
    };
}

inline ThresholdedModel model_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format").get<std::string>() != "haarreg-model")
            throw Error(ErrorCode::ParseError, "not a haarreg model document");
        DyadicDomain domain{doc.at("j0").get<int>(), doc.at("j1").get<int>(), doc.at("w").get<std::int64_t>(),
                            doc.at("d").get<std::size_t>()};
        domain.validate();
        std::vector<BasisFunction> functions;
        CoefficientVector coeffs;
        for (const auto& item : doc.at("functions")) {
            const auto kind = item.at("kind").get<std::string>();
            if (kind != "father" && kind != "mother") throw Error(ErrorCode::ParseError, "unknown function kind '" + kind + "'");
            functions.push_back(BasisFunction{kind == "father" ? WaveletKind::Father : WaveletKind::Mother,
                                              DyadicCube{item.at("level").get<int>(), item.at("gamma").get<Gamma>()},
                                              item.at("v").get<std::size_t>(), item.at("values").get<std::vector<double>>()});
            coeffs.values.push_back(item.at("coefficient").get<double>());
        }
        const double beta = doc.at("beta").is_null() ? std::numeric_limits<double>::infinity() : doc.at("beta").get<double>();
        auto basis = std::make_shared<const EmpiricalBasis>(domain, doc.at("n").get<std::size_t>(), std::move(functions));
        return ThresholdedModel(std::move(basis), std::move(coeffs), doc.at("lambda").get<double>(), beta);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed model document: ") + e.what());
    }
}

inline void write_model(const ThresholdedModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
    out << model_to_json(model).dump(2) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

inline ThresholdedModel read_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, "'" + path.string() + "': " + e.what());
    }
    return model_from_json(doc);
}

} // namespace haarreg
