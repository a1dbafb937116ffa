#include "deunet/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace deunet {

namespace {

using nlohmann::json;

json tensor_to_json(const Tensor2D& t) {
  return json{{"rows", t.rows}, {"cols", t.cols}, {"data", t.data}};
}

Tensor2D tensor_from_json(const json& j) {
  Tensor2D t(j.at("rows").get<int>(), j.at("cols").get<int>());
  t.data = j.at("data").get<std::vector<double>>();
  if (t.data.size() != static_cast<std::size_t>(t.rows) * t.cols) {
    throw std::runtime_error("checkpoint-parse: tensor payload size mismatch");
  }
  return t;
}

json activation_to_json(const ActivationDescriptor& act) {
  json j{{"kind", to_string(act.kind)}};
  switch (act.kind) {
    case ActivationKind::Deu: {
      json units = json::array();
      for (const auto& u : act.deu) {
        units.push_back(json{{"a", u.params.a},
                             {"b", u.params.b},
                             {"c", u.params.c},
                             {"c1", u.params.c1},
                             {"c2", u.params.c2},
                             {"frozen_a", u.params.frozen_a},
                             {"frozen_b", u.params.frozen_b},
                             {"frozen_c", u.params.frozen_c}});
      }
      j["units"] = std::move(units);
      break;
    }
    case ActivationKind::Prelu:
      j["alpha"] = act.prelu_alpha;
      break;
    case ActivationKind::Swish:
      j["beta"] = act.swish_beta;
      break;
    case ActivationKind::Relu:
      break;
  }
  return j;
}

ActivationDescriptor activation_from_json(const json& j, const KernelConfig& cfg) {
  ActivationDescriptor act;
  const auto kind = activation_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw std::runtime_error("checkpoint-parse: unknown activation kind");
  act.kind = *kind;
  switch (act.kind) {
    case ActivationKind::Deu: {
      for (const auto& ju : j.at("units")) {
        DeuParams p;
        p.a = ju.at("a").get<double>();
        p.b = ju.at("b").get<double>();
        p.c = ju.at("c").get<double>();
        p.c1 = ju.at("c1").get<double>();
        p.c2 = ju.at("c2").get<double>();
        p.frozen_a = ju.at("frozen_a").get<bool>();
        p.frozen_b = ju.at("frozen_b").get<bool>();
        p.frozen_c = ju.at("frozen_c").get<bool>();
        // Stored parameters are already resolved; classification is exact.
        act.deu.push_back(DeuNeuron{p, classify_subspace(p, cfg)});
      }
      break;
    }
    case ActivationKind::Prelu:
      act.prelu_alpha = j.at("alpha").get<std::vector<double>>();
      break;
    case ActivationKind::Swish:
      act.swish_beta = j.at("beta").get<std::vector<double>>();
      break;
    case ActivationKind::Relu:
      break;
  }
  return act;
}

}  // namespace

void save_checkpoint(const Network& net, const CheckpointMeta& meta,
                     const std::string& path) {
  net.validate();
  json j;
  j["format_version"] = meta.format_version;
  j["seed"] = meta.seed;
  j["epochs_trained"] = meta.epochs_trained;
  j["kernel_config"] = json{{"epsilon", net.kernel_cfg.epsilon},
                            {"exp_arg_clamp", net.kernel_cfg.exp_arg_clamp},
                            {"output_clamp", net.kernel_cfg.output_clamp}};
  j["arch"] = net.arch();

  json layers = json::array();
  for (const auto& layer : net.layers) {
    json jl;
    jl["w"] = tensor_to_json(layer.w);
    jl["bias"] = layer.bias;
    if (layer.batch_norm) {
      const auto& bn = *layer.batch_norm;
      jl["batch_norm"] = json{{"gamma", bn.gamma},
                              {"beta", bn.beta},
                              {"running_mean", bn.running_mean},
                              {"running_var", bn.running_var},
                              {"momentum", bn.momentum},
                              {"eps", bn.eps}};
    } else {
      jl["batch_norm"] = nullptr;
    }
    jl["activation"] = layer.activation ? activation_to_json(*layer.activation) : json(nullptr);
    layers.push_back(std::move(jl));
  }
  j["layers"] = std::move(layers);

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("file-open: cannot write " + path);
  out << j.dump() << "\n";
  if (!out) throw std::runtime_error("file-write: failed writing " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("file-open: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("checkpoint-parse: ") + e.what());
  }

  LoadedCheckpoint loaded;
  const int version = j.at("format_version").get<int>();
  if (version != 1) {
    throw std::runtime_error("checkpoint-version: unsupported format_version " +
                             std::to_string(version));
  }
  loaded.meta.format_version = version;
  loaded.meta.seed = j.at("seed").get<std::uint64_t>();
  loaded.meta.epochs_trained = j.at("epochs_trained").get<int>();

  const json& jk = j.at("kernel_config");
  loaded.net.kernel_cfg.epsilon = jk.at("epsilon").get<double>();
  loaded.net.kernel_cfg.exp_arg_clamp = jk.at("exp_arg_clamp").get<double>();
  loaded.net.kernel_cfg.output_clamp = jk.at("output_clamp").get<double>();

  for (const auto& jl : j.at("layers")) {
    DenseLayer layer;
    layer.w = tensor_from_json(jl.at("w"));
    layer.bias = jl.at("bias").get<std::vector<double>>();
    if (!jl.at("batch_norm").is_null()) {
      const json& jb = jl.at("batch_norm");
      BatchNormState bn;
      bn.gamma = jb.at("gamma").get<std::vector<double>>();
      bn.beta = jb.at("beta").get<std::vector<double>>();
      bn.running_mean = jb.at("running_mean").get<std::vector<double>>();
      bn.running_var = jb.at("running_var").get<std::vector<double>>();
      bn.momentum = jb.at("momentum").get<double>();
      bn.eps = jb.at("eps").get<double>();
      layer.batch_norm = std::move(bn);
    }
    if (!jl.at("activation").is_null()) {
      layer.activation = activation_from_json(jl.at("activation"), loaded.net.kernel_cfg);
    }
    loaded.net.layers.push_back(std::move(layer));
  }
  loaded.net.validate();
  return loaded;
}

}  // namespace deunet
