#include "sdd/checkpoint.hpp"

#include "sdd/errors.hpp"

namespace sdd {

std::string denoiser_to_json(const Denoiser& d, const NoiseSchedule& s) {
    std::string out = "{\"format\":\"sdd-denoiser-v1\",\"schedule\":{\"T\":";
    out += std::to_string(s.horizon());
    out += ",\"beta_min\":" + format_g17(s.beta_min());
    out += ",\"beta_max\":" + format_g17(s.beta_max());
    out += "},\"trunk\":" + mlp_to_json(d.trunk());
    out += ",\"cond_table\":[";
    for (std::size_t k = 0; k < d.cond_table().size(); ++k) {
        if (k) out += ",";
        std::vector<double> row(d.cond_table()[k].begin(), d.cond_table()[k].end());
        out += json_array_g17(row);
    }
    out += "],\"t_embed\":{\"frequencies\":";
    out += std::to_string(d.time_embedding().frequencies);
    out += "}}";
    return out;
}

DenoiserCheckpoint denoiser_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || doc.value("format", "") != "sdd-denoiser-v1") {
        throw IoError("not an sdd-denoiser-v1 document");
    }
    const auto& sched = doc.at("schedule");
    NoiseSchedule schedule = make_schedule(sched.at("T").get<int>(),
                                           sched.at("beta_min").get<double>(),
                                           sched.at("beta_max").get<double>());

    Mlp trunk = mlp_from_json(doc.at("trunk"));

    std::vector<DenseArray> table;
    for (const auto& row : doc.at("cond_table")) {
        DenseArray r = DenseArray::zeros(row.size());
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = row[i].get<double>();
        table.push_back(std::move(r));
    }

    TimeEmbedding temb{doc.at("t_embed").at("frequencies").get<int>()};
    Denoiser denoiser(std::move(trunk), std::move(table), temb, schedule.horizon());
    return {std::move(schedule), std::move(denoiser)};
}

DenoiserCheckpoint load_denoiser(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw IoError("denoiser checkpoint not found at " + path.string() +
                      "; run train-denoiser first");
    }
    return denoiser_from_json(read_json(path));
}

std::string manipulator_to_json(const Manipulator& m) {
    return "{\"format\":\"sdd-manip-v1\",\"residual\":" + mlp_to_json(m.residual()) + "}";
}

Manipulator manipulator_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || doc.value("format", "") != "sdd-manip-v1") {
        throw IoError("not an sdd-manip-v1 document");
    }
    return Manipulator(mlp_from_json(doc.at("residual")));
}

Manipulator load_manipulator(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw IoError("manipulator checkpoint not found at " + path.string() +
                      "; run distill first");
    }
    return manipulator_from_json(read_json(path));
}

}  // namespace sdd
