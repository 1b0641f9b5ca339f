#include "mlam/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace mlam {

using nlohmann::json;

void save_checkpoint(const std::string& path, const MetaNets& nets, int hidden_size,
                     uint64_t seed) {
    json root;
    root["version"] = kCheckpointVersion;
    root["hidden_size"] = hidden_size;
    root["seed"] = seed;
    json nets_json = json::object();
    for (const auto& [var, params] : nets.nets) {
        json net;
        net["hidden_size"] = params.hidden_size;
        net["input_dim"] = params.input_dim;
        json tensors = json::object();
        auto list = tensor_list(params);
        const auto& names = tensor_names();
        for (size_t i = 0; i < kMetaNetTensorCount; ++i) {
            json t;
            t["shape"] = list[i]->shape();
            t["data"] = list[i]->vec();
            tensors[names[i]] = std::move(t);
        }
        net["tensors"] = std::move(tensors);
        nets_json[var] = std::move(net);
    }
    root["nets"] = std::move(nets_json);

    std::ofstream out(path);
    if (!out) throw ValueError("cannot write checkpoint file " + path);
    out << root.dump(1) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValueError("cannot open checkpoint file " + path);
    json root = json::parse(in);
    if (root.value("version", "") != kCheckpointVersion)
        throw ValueError("checkpoint " + path + " has unsupported version \"" +
                         root.value("version", "<missing>") + "\"");
    Checkpoint ck;
    ck.hidden_size = root.at("hidden_size").get<int>();
    ck.seed = root.at("seed").get<uint64_t>();
    for (const auto& [var, net] : root.at("nets").items()) {
        MetaNetParams p;
        p.hidden_size = net.at("hidden_size").get<int>();
        p.input_dim = net.at("input_dim").get<int>();
        auto list = tensor_list(p);
        const auto& names = tensor_names();
        for (size_t i = 0; i < kMetaNetTensorCount; ++i) {
            const json& t = net.at("tensors").at(names[i]);
            *list[i] = Tensor(t.at("shape").get<Shape>(),
                              t.at("data").get<std::vector<double>>());
        }
        ck.nets.adam[var] = make_adam_state(p);
        ck.nets.nets[var] = std::move(p);
    }
    return ck;
}

}  // namespace mlam
