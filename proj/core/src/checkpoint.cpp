#include "seqsel/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace seqsel {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_tensors(std::ofstream& out, const std::vector<ConstTensorRef<float>>& refs) {
  for (const auto& ref : refs)
    out.write(reinterpret_cast<const char*>(ref.data->data()),
              static_cast<std::streamsize>(ref.data->size() * sizeof(float)));
}

void read_tensors(std::ifstream& in, const std::vector<TensorRef<float>>& refs,
                  const std::string& file) {
  for (const auto& ref : refs) {
    in.read(reinterpret_cast<char*>(ref.data->data()),
            static_cast<std::streamsize>(ref.data->size() * sizeof(float)));
    if (!in) throw std::runtime_error("checkpoint: truncated tensor data in " + file);
  }
}

}  // namespace

void save_checkpoint(const std::string& dir, const QNetParams& params,
                     const OptState<float>* opt, long long epoch) {
  fs::create_directories(dir);
  const auto refs = tensor_list(params);

  json manifest;
  manifest["format"] = "seqsel-checkpoint";
  manifest["version"] = 1;
  manifest["arch"] = arch_name(params.arch);
  manifest["n"] = params.n;
  manifest["k"] = params.k;
  manifest["epoch"] = epoch;
  manifest["dtype"] = "float32-le";

  json tensors = json::array();
  std::size_t offset = 0;
  for (const auto& ref : refs) {
    json t;
    t["name"] = ref.name;
    t["shape"] = ref.cols == 0 ? json::array({ref.rows}) : json::array({ref.rows, ref.cols});
    t["offset"] = offset;
    t["count"] = ref.data->size();
    tensors.push_back(std::move(t));
    offset += ref.data->size() * sizeof(float);
  }
  manifest["tensors"] = std::move(tensors);

  json optimizer;
  optimizer["type"] = "adam";
  optimizer["beta1"] = kAdamBeta1;
  optimizer["beta2"] = kAdamBeta2;
  optimizer["epsilon"] = kAdamEpsilon;
  if (opt) {
    optimizer["step"] = opt->step;
    optimizer["learning_rate"] = opt->learning_rate;
    optimizer["moments_file"] = "opt.bin";
  }
  manifest["optimizer"] = std::move(optimizer);

  {
    std::ofstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw std::runtime_error("checkpoint: cannot write manifest.json in " + dir);
    mf << manifest.dump(2) << '\n';
  }
  {
    std::ofstream pf(fs::path(dir) / "params.bin", std::ios::binary);
    if (!pf) throw std::runtime_error("checkpoint: cannot write params.bin in " + dir);
    write_tensors(pf, refs);
    if (!pf) throw std::runtime_error("checkpoint: failed writing params.bin in " + dir);
  }
  if (opt) {
    std::ofstream of(fs::path(dir) / "opt.bin", std::ios::binary);
    if (!of) throw std::runtime_error("checkpoint: cannot write opt.bin in " + dir);
    write_tensors(of, tensor_list(opt->m));
    write_tensors(of, tensor_list(opt->v));
    if (!of) throw std::runtime_error("checkpoint: failed writing opt.bin in " + dir);
  }
}

Checkpoint load_checkpoint(const std::string& dir) {
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  std::ifstream mf(manifest_path);
  if (!mf) throw std::runtime_error("checkpoint: cannot open " + manifest_path.string());
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint: invalid manifest.json: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "seqsel-checkpoint")
    throw std::runtime_error("checkpoint: unrecognized manifest format in " + dir);

  Checkpoint ckpt;
  const Arch arch = arch_from_name(manifest.at("arch").get<std::string>());
  const int n = manifest.at("n").get<int>();
  const int k = manifest.at("k").get<int>();
  ckpt.epoch = manifest.value("epoch", 0LL);

  // init_params gives correctly shaped tensors; contents are overwritten
  ckpt.params = init_params(n, k, arch, 0);
  auto refs = tensor_list(ckpt.params);

  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != refs.size())
    throw std::runtime_error("checkpoint: tensor count mismatch in " + dir);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto& t = tensors[i];
    if (t.at("name").get<std::string>() != refs[i].name)
      throw std::runtime_error("checkpoint: unexpected tensor order, found '" +
                               t.at("name").get<std::string>() + "', expected '" + refs[i].name +
                               "'");
    if (t.at("count").get<std::size_t>() != refs[i].data->size())
      throw std::runtime_error("checkpoint: tensor '" + refs[i].name + "' size mismatch");
  }

  {
    std::ifstream pf(fs::path(dir) / "params.bin", std::ios::binary);
    if (!pf) throw std::runtime_error("checkpoint: cannot open params.bin in " + dir);
    read_tensors(pf, refs, "params.bin");
  }

  const auto& optimizer = manifest.at("optimizer");
  if (optimizer.contains("moments_file")) {
    OptState<float> opt = init_opt_state(ckpt.params);
    opt.step = optimizer.value("step", 0LL);
    opt.learning_rate = optimizer.value("learning_rate", kInitialLearningRate);
    std::ifstream of(fs::path(dir) / optimizer.at("moments_file").get<std::string>(),
                     std::ios::binary);
    if (!of) throw std::runtime_error("checkpoint: cannot open opt.bin in " + dir);
    read_tensors(of, tensor_list(opt.m), "opt.bin");
    read_tensors(of, tensor_list(opt.v), "opt.bin");
    ckpt.opt = std::move(opt);
  }
  return ckpt;
}

}  // namespace seqsel
