#include "sdd/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sdd/errors.hpp"

namespace sdd {

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed for " + path.string() + ": " + ec.message());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw IoError("invalid JSON in " + path.string());
    return doc;
}

std::string json_array_g17(const std::vector<double>& values) {
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ",";
        out += format_g17(values[i]);
    }
    return out + "]";
}

std::string mlp_to_json(const Mlp& net) {
    std::string out = "{\"format\":\"sdd-mlp-v1\",\"layers\":[";
    for (std::size_t li = 0; li < net.layers().size(); ++li) {
        const Layer& layer = net.layers()[li];
        if (li) out += ",";
        out += "{\"w\":[";
        for (std::size_t r = 0; r < layer.w.rows(); ++r) {
            if (r) out += ",";
            out += "[";
            for (std::size_t c = 0; c < layer.w.cols(); ++c) {
                if (c) out += ",";
                out += format_g17(layer.w.at(r, c));
            }
            out += "]";
        }
        out += "],\"b\":";
        std::vector<double> bias(layer.b.begin(), layer.b.end());
        out += json_array_g17(bias);
        out += "}";
    }
    out += "],\"activation\":\"" + activation_name(net.activation()) + "\"}";
    return out;
}

Mlp mlp_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || doc.value("format", "") != "sdd-mlp-v1") {
        throw IoError("not an sdd-mlp-v1 document");
    }
    const Activation act = activation_from_name(doc.at("activation").get<std::string>());

    const auto& layers = doc.at("layers");
    if (!layers.is_array() || layers.empty()) throw IoError("mlp checkpoint: empty layers");

    std::vector<std::size_t> dims;
    dims.push_back(layers[0].at("w")[0].size());
    for (const auto& l : layers) dims.push_back(l.at("w").size());

    Mlp net(dims, act);
    for (std::size_t li = 0; li < layers.size(); ++li) {
        Layer& layer = net.layers()[li];
        const auto& w = layers[li].at("w");
        const auto& b = layers[li].at("b");
        if (w.size() != layer.w.rows() || b.size() != layer.b.size()) {
            throw IoError("mlp checkpoint: inconsistent layer dims");
        }
        for (std::size_t r = 0; r < layer.w.rows(); ++r) {
            const auto& row = w[r];
            if (row.size() != layer.w.cols()) {
                throw IoError("mlp checkpoint: ragged weight row");
            }
            for (std::size_t c = 0; c < layer.w.cols(); ++c) {
                layer.w.at(r, c) = row[c].get<double>();
            }
        }
        for (std::size_t i = 0; i < layer.b.size(); ++i) layer.b[i] = b[i].get<double>();
    }
    return net;
}

}  // namespace sdd
