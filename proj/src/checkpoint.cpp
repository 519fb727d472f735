#include "ekl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace ekl {

namespace {

constexpr int kFormatVersion = 1;

void write_doubles(std::ostream& os, const double* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * 8));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      auto u = std::bit_cast<std::uint64_t>(data[i]);
      char b[8];
      for (int j = 0; j < 8; ++j) b[j] = static_cast<char>(u >> (8 * j));
      os.write(b, 8);
    }
  }
}

void read_doubles(std::istream& is, double* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * 8));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      char b[8];
      is.read(b, 8);
      std::uint64_t u = 0;
      for (int j = 0; j < 8; ++j) u |= std::uint64_t(static_cast<unsigned char>(b[j])) << (8 * j);
      data[i] = std::bit_cast<double>(u);
    }
  }
}

struct TensorRef {
  const char* name;
  const double* data;
  std::size_t rows, cols;
};

// Fixed serialization order; empty tensors are skipped but the order of the
// present ones never changes.
std::vector<TensorRef> tensor_list(const ModelParams& p) {
  std::vector<TensorRef> ts;
  auto add_mat = [&ts](const char* name, const Mat& m) {
    if (m.size() > 0)
      ts.push_back({name, m.data(), static_cast<std::size_t>(m.rows()),
                    static_cast<std::size_t>(m.cols())});
  };
  auto add_vec = [&ts](const char* name, const Vec& v) {
    if (v.size() > 0) ts.push_back({name, v.data(), static_cast<std::size_t>(v.size()), 1});
  };
  add_mat("entity_emb", p.entity_emb);
  add_mat("relation_emb", p.relation_emb);
  add_mat("event_out", p.event_out);
  add_mat("concat_proj", p.concat_proj);
  add_vec("concat_bias", p.concat_bias);
  add_mat("rnn_wxh", p.rnn_wxh);
  add_mat("rnn_whh", p.rnn_whh);
  add_vec("rnn_bh", p.rnn_bh);
  add_mat("rnn_out", p.rnn_out);
  add_vec("rnn_out_bias", p.rnn_out_bias);
  return ts;
}

nlohmann::json history_to_json(const std::vector<EpochStats>& history) {
  nlohmann::json arr = nlohmann::json::array();
  for (const EpochStats& s : history) {
    nlohmann::json row{{"epoch", s.epoch}};
    if (s.epoch > 0) {
      row["kg_loss"] = s.kg_loss;
      row["seq_loss"] = s.seq_loss;
      row["joint"] = s.joint;
    }
    if (s.valid_metric) row["valid_mean_rank"] = *s.valid_metric;
    arr.push_back(std::move(row));
  }
  return arr;
}

std::vector<EpochStats> history_from_json(const nlohmann::json& arr) {
  std::vector<EpochStats> history;
  for (const auto& row : arr) {
    EpochStats s;
    s.epoch = row.at("epoch").get<int>();
    s.kg_loss = row.value("kg_loss", 0.0);
    s.seq_loss = row.value("seq_loss", 0.0);
    s.joint = row.value("joint", 0.0);
    if (row.contains("valid_mean_rank")) s.valid_metric = row["valid_mean_rank"].get<double>();
    history.push_back(s);
  }
  return history;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params,
                     const TrainConfig& cfg, const std::vector<EpochStats>& history) {
  std::filesystem::create_directories(dir);
  const auto tensors = tensor_list(params);

  nlohmann::json meta;
  meta["format_version"] = kFormatVersion;
  meta["model"] = to_string(params.kind);
  meta["config"] = cfg.to_json();
  meta["d"] = params.d;
  meta["concat_width"] = params.concat_width;
  meta["rnn_hidden"] = params.rnn_hidden;
  meta["num_entities"] = static_cast<std::uint64_t>(params.entity_emb.rows());
  meta["num_relations"] = static_cast<std::uint64_t>(params.relation_emb.rows());
  nlohmann::json event_ids = nlohmann::json::array();
  for (EntityId e : params.event_ids) event_ids.push_back(e.value);
  meta["event_ids"] = std::move(event_ids);
  nlohmann::json shapes = nlohmann::json::array();
  for (const TensorRef& t : tensors)
    shapes.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
  meta["tensors"] = std::move(shapes);
  meta["history"] = history_to_json(history);

  {
    std::ofstream js(dir / "checkpoint.json", std::ios::binary);
    if (!js) throw CheckpointError("cannot write " + (dir / "checkpoint.json").string());
    js << meta.dump(2) << "\n";
  }
  std::ofstream bin(dir / "checkpoint.bin", std::ios::binary);
  if (!bin) throw CheckpointError("cannot write " + (dir / "checkpoint.bin").string());
  for (const TensorRef& t : tensors) write_doubles(bin, t.data, t.rows * t.cols);
  if (!bin) throw CheckpointError("short write to checkpoint.bin");
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream js(dir / "checkpoint.json", std::ios::binary);
  if (!js) throw CheckpointError("cannot read " + (dir / "checkpoint.json").string());
  nlohmann::json meta;
  try {
    js >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("malformed checkpoint.json: " + std::string(e.what()));
  }
  if (meta.value("format_version", -1) != kFormatVersion)
    throw CheckpointError("unsupported checkpoint format version");

  Checkpoint ck;
  auto kind = parse_model_kind(meta.at("model").get<std::string>());
  if (!kind) throw CheckpointError("unknown model kind in checkpoint");
  ck.cfg = TrainConfig::from_json(meta.at("config"));
  ck.history = history_from_json(meta.value("history", nlohmann::json::array()));
  ck.num_entities = meta.at("num_entities").get<std::uint32_t>();
  ck.num_relations = meta.at("num_relations").get<std::uint32_t>();

  ModelParams& p = ck.params;
  p.kind = *kind;
  p.d = meta.at("d").get<int>();
  p.concat_width = meta.at("concat_width").get<int>();
  p.rnn_hidden = meta.at("rnn_hidden").get<int>();
  p.event_ids.clear();
  for (const auto& v : meta.at("event_ids")) p.event_ids.push_back(EntityId{v.get<std::uint32_t>()});
  p.event_row_of.assign(ck.num_entities, -1);
  for (std::size_t i = 0; i < p.event_ids.size(); ++i) {
    const std::uint32_t id = p.event_ids[i].value;
    if (id >= ck.num_entities) throw CheckpointError("event id out of range in checkpoint");
    p.event_row_of[id] = static_cast<std::int32_t>(i);
  }

  std::ifstream bin(dir / "checkpoint.bin", std::ios::binary);
  if (!bin) throw CheckpointError("cannot read " + (dir / "checkpoint.bin").string());
  std::size_t total = 0;
  for (const auto& shape : meta.at("tensors")) {
    const std::string name = shape.at("name").get<std::string>();
    const auto rows = shape.at("rows").get<std::size_t>();
    const auto cols = shape.at("cols").get<std::size_t>();
    total += rows * cols;
    double* dst = nullptr;
    auto mat = [&](Mat& m) {
      m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
      dst = m.data();
    };
    auto vec = [&](Vec& v) {
      if (cols != 1) throw CheckpointError("vector tensor " + name + " with cols != 1");
      v.resize(static_cast<Eigen::Index>(rows));
      dst = v.data();
    };
    if (name == "entity_emb") mat(p.entity_emb);
    else if (name == "relation_emb") mat(p.relation_emb);
    else if (name == "event_out") mat(p.event_out);
    else if (name == "concat_proj") mat(p.concat_proj);
    else if (name == "concat_bias") vec(p.concat_bias);
    else if (name == "rnn_wxh") mat(p.rnn_wxh);
    else if (name == "rnn_whh") mat(p.rnn_whh);
    else if (name == "rnn_bh") vec(p.rnn_bh);
    else if (name == "rnn_out") mat(p.rnn_out);
    else if (name == "rnn_out_bias") vec(p.rnn_out_bias);
    else throw CheckpointError("unknown tensor " + name + " in checkpoint");
    read_doubles(bin, dst, rows * cols);
    if (!bin) throw CheckpointError("checkpoint.bin truncated while reading " + name);
  }
  bin.peek();
  if (!bin.eof()) throw CheckpointError("checkpoint.bin larger than the declared tensors");
  if (static_cast<std::size_t>(p.entity_emb.rows()) != ck.num_entities ||
      static_cast<std::size_t>(p.relation_emb.rows()) != ck.num_relations)
    throw CheckpointError("tensor shapes disagree with vocabulary sizes");
  return ck;
}

}  // namespace ekl
