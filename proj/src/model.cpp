#include "amsr/model.hpp"

#include "amsr/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace amsr {

namespace {

int require_int(const nlohmann::json& j, const char* key, const std::string& origin) {
    if (!j.contains(key) || !j.at(key).is_number_integer()) {
        throw io_error(origin + ": missing or non-integer field '" + key + "'");
    }
    return j.at(key).get<int>();
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
}

// Fetch by exact name and shape, or raise a bind_error naming the tensor.
std::vector<float> fetch(const WeightStore& ws, const std::string& name,
                         const std::vector<int>& shape) {
    const TensorEntry* e = ws.find(name);
    if (!e) throw bind_error("missing tensor '" + name + "'");
    if (e->shape != shape) {
        throw bind_error("tensor '" + name + "' has shape " + shape_str(e->shape) + ", expected " +
                         shape_str(shape));
    }
    return ws.tensor(*e);
}

ConvWeights3x3 fetch_conv3x3(const WeightStore& ws, const std::string& prefix, int out_ch,
                             int in_ch) {
    auto taps = fetch(ws, prefix + ".weight", {out_ch, in_ch, 3, 3});
    auto bias = fetch(ws, prefix + ".bias", {out_ch});
    return ConvWeights3x3(out_ch, in_ch, std::move(taps), std::move(bias));
}

} // namespace

ModelSpec parse_model_spec(const std::string& json_text, const std::string& origin) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const std::exception& ex) {
        throw io_error(origin + ": invalid JSON: " + ex.what());
    }

    ModelSpec spec;
    if (!j.contains("name") || !j.at("name").is_string()) {
        throw io_error(origin + ": missing string field 'name'");
    }
    spec.name = j.at("name").get<std::string>();
    spec.scale = require_int(j, "scale", origin);
    if (spec.scale < 2 || spec.scale > 4) {
        throw io_error(origin + ": scale must be 2, 3 or 4");
    }
    spec.channels = require_int(j, "channels", origin);
    if (spec.channels <= 0) throw io_error(origin + ": channels must be positive");

    if (!j.contains("body") || !j.at("body").is_object()) {
        throw io_error(origin + ": missing object field 'body'");
    }
    const auto& body = j.at("body");
    const std::string kind = body.value("kind", "");
    if (kind == "cnn") {
        spec.body_kind = BodyKind::cnn;
        spec.body_depth = require_int(body, "blocks", origin);
        const std::string act = body.value("activation", "none");
        if (act == "relu") {
            spec.activation = Activation::relu;
        } else if (act == "prelu") {
            spec.activation = Activation::prelu;
        } else if (act == "none") {
            spec.activation = Activation::none;
        } else {
            throw io_error(origin + ": unknown activation '" + act + "'");
        }
    } else if (kind == "stl") {
        spec.body_kind = BodyKind::stl;
        spec.body_depth = require_int(body, "layers", origin);
        spec.win = require_int(body, "win", origin);
        spec.heads = require_int(body, "heads", origin);
        spec.hidden = require_int(body, "hidden", origin);
        if (spec.win <= 0 || spec.heads <= 0 || spec.hidden <= 0 ||
            spec.channels % spec.heads != 0) {
            throw io_error(origin + ": bad stl body dimensions");
        }
    } else {
        throw io_error(origin + ": body.kind must be 'cnn' or 'stl'");
    }
    if (spec.body_depth < 0) throw io_error(origin + ": negative body depth");

    if (j.contains("tail")) {
        if (!j.at("tail").is_object()) throw io_error(origin + ": 'tail' must be an object");
        spec.final_conv = j.at("tail").value("final_conv", false);
    }
    return spec;
}

ModelSpec load_model_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error(path + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model_spec(ss.str(), path);
}

std::vector<TensorEntry> expected_tensors(const ModelSpec& spec) {
    std::vector<TensorEntry> out;
    std::uint64_t offset = 0;
    auto add = [&](const std::string& name, std::vector<int> shape) {
        TensorEntry e;
        e.name = name;
        e.shape = std::move(shape);
        e.offset = offset;
        offset += e.elements() * 4;
        out.push_back(std::move(e));
    };

    const int C = spec.channels;
    add("head.weight", {C, 3, 3, 3});
    add("head.bias", {C});
    for (int i = 0; i < spec.body_depth; ++i) {
        const std::string p = "body." + std::to_string(i);
        if (spec.body_kind == BodyKind::cnn) {
            add(p + ".weight", {C, C, 3, 3});
            add(p + ".bias", {C});
            if (spec.activation == Activation::prelu) add(p + ".prelu", {C});
        } else {
            add(p + ".qkv.weight", {3 * C, C});
            add(p + ".qkv.bias", {3 * C});
            add(p + ".proj.weight", {C, C});
            add(p + ".proj.bias", {C});
            add(p + ".ln1.gamma", {C});
            add(p + ".ln1.beta", {C});
            add(p + ".ln2.gamma", {C});
            add(p + ".ln2.beta", {C});
            add(p + ".mlp.fc1.weight", {spec.hidden, C});
            add(p + ".mlp.fc1.bias", {spec.hidden});
            add(p + ".mlp.fc2.weight", {C, spec.hidden});
            add(p + ".mlp.fc2.bias", {C});
        }
    }
    add("tail.conv.weight", {3 * spec.scale * spec.scale, C, 3, 3});
    add("tail.conv.bias", {3 * spec.scale * spec.scale});
    if (spec.final_conv) {
        add("tail.final.weight", {3, 3, 3, 3});
        add("tail.final.bias", {3});
    }
    return out;
}

BoundModel bind(const ModelSpec& spec, const WeightStore& ws, std::vector<std::string>* warnings) {
    BoundModel m;
    m.spec = spec;
    const int C = spec.channels;

    m.head = fetch_conv3x3(ws, "head", C, 3);
    for (int i = 0; i < spec.body_depth; ++i) {
        const std::string p = "body." + std::to_string(i);
        if (spec.body_kind == BodyKind::cnn) {
            MaskedConvBlock blk;
            blk.weights = reshape3x3_to_1x1(fetch_conv3x3(ws, p, C, C));
            blk.act = spec.activation;
            if (spec.activation == Activation::prelu) {
                blk.prelu_slope = fetch(ws, p + ".prelu", {C});
            }
            m.cnn_body.push_back(std::move(blk));
        } else {
            StlWeights w;
            w.dim = C;
            w.heads = spec.heads;
            w.win = spec.win;
            w.hidden = spec.hidden;
            w.qkv_w = fetch(ws, p + ".qkv.weight", {3 * C, C});
            w.qkv_b = fetch(ws, p + ".qkv.bias", {3 * C});
            w.proj_w = fetch(ws, p + ".proj.weight", {C, C});
            w.proj_b = fetch(ws, p + ".proj.bias", {C});
            w.ln1_g = fetch(ws, p + ".ln1.gamma", {C});
            w.ln1_b = fetch(ws, p + ".ln1.beta", {C});
            w.ln2_g = fetch(ws, p + ".ln2.gamma", {C});
            w.ln2_b = fetch(ws, p + ".ln2.beta", {C});
            w.fc1_w = fetch(ws, p + ".mlp.fc1.weight", {spec.hidden, C});
            w.fc1_b = fetch(ws, p + ".mlp.fc1.bias", {spec.hidden});
            w.fc2_w = fetch(ws, p + ".mlp.fc2.weight", {C, spec.hidden});
            w.fc2_b = fetch(ws, p + ".mlp.fc2.bias", {C});
            validate_stl_weights(w);
            m.stl_body.push_back(std::move(w));
        }
    }
    m.tail_conv = fetch_conv3x3(ws, "tail.conv", 3 * spec.scale * spec.scale, C);
    if (spec.final_conv) m.tail_final = fetch_conv3x3(ws, "tail.final", 3, 3);

    if (warnings) {
        std::set<std::string> wanted;
        for (const auto& e : expected_tensors(spec)) wanted.insert(e.name);
        for (const auto& e : ws.manifest) {
            if (!wanted.count(e.name)) {
                warnings->push_back("unused tensor '" + e.name + "' in weight store");
            }
        }
    }
    return m;
}

} // namespace amsr
