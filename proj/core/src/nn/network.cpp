#include "patchattack/nn/network.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "patchattack/error.hpp"

namespace patchattack::nn {

namespace {
constexpr char kMagic[] = "PANN1\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;
static_assert(std::endian::native == std::endian::little, "weight files assume a little-endian host");
}  // namespace

Network::Network(const Network& other) : metadata_(other.metadata_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Layer& Network::add(std::unique_ptr<Layer> layer) {
  layers_.push_back(std::move(layer));
  return *layers_.back();
}

Tensor Network::forward(const Tensor& x) const {
  Tensor cur = x;
  for (const auto& l : layers_) cur = l->forward(cur);
  return cur;
}

std::vector<Tensor> Network::forward_trace(const Tensor& x, std::size_t upto) const {
  std::vector<Tensor> trace;
  trace.reserve(upto + 1);
  trace.push_back(x);
  extend_trace(trace, upto);
  return trace;
}

void Network::extend_trace(std::vector<Tensor>& trace, std::size_t upto) const {
  if (upto > layers_.size()) throw InvalidArgument("extend_trace: upto beyond network depth");
  for (std::size_t i = trace.size() - 1; i < upto; ++i) trace.push_back(layers_[i]->forward(trace[i]));
}

Tensor Network::backward_input(const std::vector<Tensor>& trace, Tensor grad, std::size_t begin,
                               std::size_t end) const {
  for (std::size_t i = end; i > begin; --i) {
    grad = layers_[i - 1]->backward_input(trace[i - 1], trace[i], grad);
  }
  return grad;
}

Tensor Network::backward(const std::vector<Tensor>& trace, Tensor grad) {
  const std::size_t end = trace.size() - 1;
  for (std::size_t i = end; i > 0; --i) {
    Layer& l = *layers_[i - 1];
    l.accumulate_grads(trace[i - 1], grad);
    if (i > 1) grad = l.backward_input(trace[i - 1], trace[i], grad);
  }
  return grad;
}

std::vector<Param*> Network::params() {
  std::vector<Param*> out;
  for (auto& l : layers_) {
    for (Param* p : l->params()) out.push_back(p);
  }
  return out;
}

std::vector<const Param*> Network::params() const {
  std::vector<const Param*> out;
  for (const auto& l : layers_) {
    const Layer& cl = *l;
    for (const Param* p : cl.params()) out.push_back(p);
  }
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Param* p : params()) n += p->value.size();
  return n;
}

void Network::zero_grad() {
  for (Param* p : params()) p->zero_grad();
}

void Network::init_weights(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& l : layers_) {
    if (auto* conv = dynamic_cast<Conv3x3*>(l.get())) conv->init_he(rng);
    if (auto* lin = dynamic_cast<Linear*>(l.get())) lin->init_he(rng);
  }
}

void Network::save(const std::filesystem::path& path) const {
  nlohmann::json header;
  header["layers"] = nlohmann::json::array();
  for (const auto& l : layers_) header["layers"].push_back(l->describe());
  header["metadata"] = metadata_;
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("Network::save: cannot open " + path.string());
  out.write(kMagic, static_cast<std::streamsize>(kMagicLen));
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Param* p : params()) {
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(float)));
  }
  if (!out) throw Error("Network::save: write failed for " + path.string());
}

Network Network::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightsUnavailable("weights not found: " + path.string());
  char magic[kMagicLen];
  in.read(magic, static_cast<std::streamsize>(kMagicLen));
  if (!in || std::memcmp(magic, kMagic, kMagicLen) != 0) {
    throw WeightsUnavailable("not a network weights file: " + path.string());
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw WeightsUnavailable("truncated weights header: " + path.string());

  const auto header = nlohmann::json::parse(text);
  Network net;
  for (const auto& spec : header.at("layers")) net.add(layer_from_json(spec));
  net.metadata_ = header.value("metadata", nlohmann::json::object());
  for (Param* p : net.params()) {
    in.read(reinterpret_cast<char*>(p->value.data()), static_cast<std::streamsize>(p->value.size() * sizeof(float)));
    if (!in) throw WeightsUnavailable("truncated weights payload: " + path.string());
  }
  return net;
}

}  // namespace patchattack::nn
