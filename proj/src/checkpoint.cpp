#include "rlop/checkpoint.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "rlop/format.hpp"

namespace rlop::nn {

namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw std::runtime_error("checkpoint: " + what);
}

double parse_double(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') malformed("bad number '" + token + "'");
  return v;
}

void write_values(std::ostream& out, const char* tag, const double* values, std::size_t n) {
  out << tag;
  for (std::size_t i = 0; i < n; ++i) out << ' ' << fmt_hex(values[i]);
  out << '\n';
}

std::vector<double> read_values(std::istream& in, const std::string& tag, std::size_t n) {
  std::string line;
  if (!std::getline(in, line)) malformed("unexpected end of file, wanted '" + tag + "'");
  std::istringstream row(line);
  std::string head;
  row >> head;
  if (head != tag) malformed("expected '" + tag + "' line, got '" + head + "'");
  std::vector<double> values;
  values.reserve(n);
  for (std::string token; row >> token;) values.push_back(parse_double(token));
  if (values.size() != n) malformed("'" + tag + "' line has the wrong number of values");
  return values;
}

// Reads "key value key value ..." after a leading keyword.
std::map<std::string, std::string> read_fields(std::istringstream& row) {
  std::map<std::string, std::string> fields;
  for (std::string key, value; row >> key >> value;) fields[key] = value;
  return fields;
}

int to_int(const std::map<std::string, std::string>& fields, const std::string& key) {
  const auto it = fields.find(key);
  if (it == fields.end()) malformed("missing field '" + key + "'");
  return std::stoi(it->second);
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out << "rlop-checkpoint " << kCheckpointVersion << '\n';
  for (const auto& [key, value] : ckpt.meta) {
    if (key.find_first_of(" \n") != std::string::npos || value.find('\n') != std::string::npos) {
      throw std::invalid_argument("checkpoint: meta keys may not contain whitespace");
    }
    out << "meta " << key << ' ' << value << '\n';
  }
  for (const auto& [name, net] : ckpt.networks) {
    const auto& c = net.config();
    out << "network " << name << " input " << c.input_dim << " latent " << c.latent_dim
        << " blocks " << c.blocks << " layers " << c.layers_per_block << " output "
        << c.output_dim << " activation " << to_string(c.activation) << '\n';
    const auto names = net.layer_names();
    const auto layers = net.layers();
    const auto params = net.params();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& layer = layers[l];
      out << "layer " << names[l] << " out " << layer.out << " in " << layer.in << '\n';
      for (int row = 0; row < layer.out; ++row) {
        write_values(out, "w", params.data() + layer.weight + static_cast<std::size_t>(row) * layer.in,
                     static_cast<std::size_t>(layer.in));
      }
      write_values(out, "b", params.data() + layer.bias, static_cast<std::size_t>(layer.out));
    }
  }
  for (const auto& [name, adam] : ckpt.optimizers) {
    out << "adam " << name << " size " << adam.first_moment.size() << " step " << adam.step
        << " lr " << fmt_hex(adam.learning_rate) << " beta1 " << fmt_hex(adam.beta1) << " beta2 "
        << fmt_hex(adam.beta2) << " eps " << fmt_hex(adam.epsilon) << '\n';
    write_values(out, "m", adam.first_moment.data(), adam.first_moment.size());
    write_values(out, "v", adam.second_moment.data(), adam.second_moment.size());
  }
  out << "end\n";
}

Checkpoint read_checkpoint(std::istream& in) {
  Checkpoint ckpt;
  std::string line;
  if (!std::getline(in, line)) malformed("empty input");
  {
    std::istringstream header(line);
    std::string magic;
    int version = 0;
    header >> magic >> version;
    if (magic != "rlop-checkpoint") malformed("missing 'rlop-checkpoint' header");
    if (version != kCheckpointVersion) malformed("unsupported version " + std::to_string(version));
  }
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string keyword;
    row >> keyword;
    if (keyword == "end") return ckpt;
    if (keyword == "meta") {
      std::string key;
      row >> key;
      std::string value;
      std::getline(row >> std::ws, value);
      ckpt.meta[key] = value;
    } else if (keyword == "network") {
      std::string name;
      row >> name;
      const auto fields = read_fields(row);
      ResNetConfig config;
      config.input_dim = to_int(fields, "input");
      config.latent_dim = to_int(fields, "latent");
      config.blocks = to_int(fields, "blocks");
      config.layers_per_block = to_int(fields, "layers");
      config.output_dim = to_int(fields, "output");
      const auto act = fields.find("activation");
      if (act == fields.end()) malformed("missing field 'activation'");
      config.activation = activation_from_string(act->second);
      ResNet net(config);
      const auto names = net.layer_names();
      auto params = net.params();
      const auto layers = net.layers();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        if (!std::getline(in, line)) malformed("truncated network '" + name + "'");
        std::istringstream layer_row(line);
        std::string tag, layer_name;
        layer_row >> tag >> layer_name;
        const auto dims = read_fields(layer_row);
        const auto& layer = layers[l];
        if (tag != "layer" || layer_name != names[l] || to_int(dims, "out") != layer.out ||
            to_int(dims, "in") != layer.in) {
          malformed("layer manifest mismatch in '" + name + "' at '" + layer_name + "'");
        }
        for (int r = 0; r < layer.out; ++r) {
          const auto w = read_values(in, "w", static_cast<std::size_t>(layer.in));
          std::copy(w.begin(), w.end(),
                    params.begin() + static_cast<std::ptrdiff_t>(layer.weight + static_cast<std::size_t>(r) * layer.in));
        }
        const auto b = read_values(in, "b", static_cast<std::size_t>(layer.out));
        std::copy(b.begin(), b.end(), params.begin() + static_cast<std::ptrdiff_t>(layer.bias));
      }
      ckpt.networks.emplace(name, std::move(net));
    } else if (keyword == "adam") {
      std::string name;
      row >> name;
      const auto fields = read_fields(row);
      const auto n = static_cast<std::size_t>(to_int(fields, "size"));
      AdamState adam(n, parse_double(fields.at("lr")));
      adam.step = std::stoull(fields.at("step"));
      adam.beta1 = parse_double(fields.at("beta1"));
      adam.beta2 = parse_double(fields.at("beta2"));
      adam.epsilon = parse_double(fields.at("eps"));
      adam.first_moment = read_values(in, "m", n);
      adam.second_moment = read_values(in, "v", n);
      ckpt.optimizers.emplace(name, std::move(adam));
    } else if (!keyword.empty()) {
      malformed("unknown record '" + keyword + "'");
    }
  }
  malformed("missing 'end' record");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  // Written beside the target and renamed, so readers never see half a file.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + tmp.string() + " for writing");
    write_checkpoint(out, ckpt);
    out.flush();
    if (!out) throw std::runtime_error("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace rlop::nn
