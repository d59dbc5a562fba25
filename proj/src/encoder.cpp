#include "fungi/encoder.hpp"

#include <algorithm>
#include <cstring>
#include <set>

#include <json.hpp>

#include "fungi/error.hpp"
#include "fungi/rng.hpp"
#include "fungi/util.hpp"

namespace fungi {

namespace {

using nlohmann::json;

constexpr char kCheckpointMagic[8] = {'F', 'Z', 'S', 'L', 'C', 'K', 'P', '1'};

void init_tensor(Mat& m, Index rows, Index cols, Rng& rng) {
  m.resize(rows, cols);
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Index>(rows, 1)));
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-bound, bound);
}

Mat l2_normalize_rows(Mat m) {
  for (Index r = 0; r < m.rows(); ++r) {
    const double norm = m.row(r).norm();
    if (norm > 0) m.row(r) /= norm;
  }
  return m;
}

}  // namespace

const char* param_group_name(ParamGroup group) {
  switch (group) {
    case ParamGroup::G1: return "g1";
    case ParamGroup::G2: return "g2";
    case ParamGroup::G3: return "g3";
    case ParamGroup::Heads: return "heads";
    case ParamGroup::LogTau: return "log_tau";
  }
  throw Error("invalid param group");
}

FreezeMask FreezeMask::none() { return FreezeMask{}; }

FreezeMask FreezeMask::all() {
  FreezeMask mask;
  mask.trainable.fill(true);
  return mask;
}

void EncoderDims::validate() const {
  if (patch < 1 || hidden < 1 || text_hidden < 1 || out < 1)
    throw ConfigError("encoder dims must all be positive");
}

Vocabulary Vocabulary::build(const std::vector<std::string>& captions) {
  std::set<std::string> unique;
  for (const auto& caption : captions) {
    for (auto& token : tokenize(caption)) unique.insert(std::move(token));
  }
  Vocabulary vocab;
  vocab.tokens.reserve(unique.size() + 1);
  vocab.tokens.emplace_back("<unk>");
  for (const auto& token : unique) vocab.tokens.push_back(token);
  for (std::size_t i = 0; i < vocab.tokens.size(); ++i)
    vocab.index.emplace(vocab.tokens[i], static_cast<int>(i));
  return vocab;
}

int Vocabulary::lookup(const std::string& token) const {
  const auto it = index.find(token);
  return it == index.end() ? 0 : it->second;
}

double EncoderPair::temperature() const {
  return std::clamp(std::exp(log_temperature), kTauMin, kTauMax);
}

EncoderPair EncoderPair::zeros_like() const {
  EncoderPair z;
  z.dims = dims;
  z.vocab = vocab;
  z.mask = mask;
  z.log_temperature = 0.0;
  z.image.w_patch = Mat::Zero(image.w_patch.rows(), image.w_patch.cols());
  z.image.b_patch = RowVec::Zero(image.b_patch.size());
  z.image.w_g1 = Mat::Zero(image.w_g1.rows(), image.w_g1.cols());
  z.image.b_g1 = RowVec::Zero(image.b_g1.size());
  z.image.w_g2 = Mat::Zero(image.w_g2.rows(), image.w_g2.cols());
  z.image.b_g2 = RowVec::Zero(image.b_g2.size());
  z.image.w_head = Mat::Zero(image.w_head.rows(), image.w_head.cols());
  z.image.b_head = RowVec::Zero(image.b_head.size());
  z.text.embedding = Mat::Zero(text.embedding.rows(), text.embedding.cols());
  z.text.w_g3 = Mat::Zero(text.w_g3.rows(), text.w_g3.cols());
  z.text.b_g3 = RowVec::Zero(text.b_g3.size());
  z.text.w_head = Mat::Zero(text.w_head.rows(), text.w_head.cols());
  z.text.b_head = RowVec::Zero(text.b_head.size());
  return z;
}

EncoderPair init_params(std::uint64_t seed, const EncoderDims& dims, const Vocabulary& vocab) {
  dims.validate();
  if (vocab.size() < 1) throw ConfigError("vocabulary must contain at least the unknown token");
  EncoderPair pair;
  pair.dims = dims;
  pair.vocab = vocab;
  pair.log_temperature = std::log(kTauInit);
  pair.mask = FreezeMask::none();

  Rng rng(derive_seed(seed, 0xE5C0DE));
  init_tensor(pair.image.w_patch, dims.patch_dim(), dims.hidden, rng);
  pair.image.b_patch = RowVec::Zero(dims.hidden);
  init_tensor(pair.image.w_g1, dims.hidden, dims.hidden, rng);
  pair.image.b_g1 = RowVec::Zero(dims.hidden);
  init_tensor(pair.image.w_g2, dims.hidden, dims.hidden, rng);
  pair.image.b_g2 = RowVec::Zero(dims.hidden);
  init_tensor(pair.image.w_head, dims.hidden, dims.out, rng);
  pair.image.b_head = RowVec::Zero(dims.out);

  init_tensor(pair.text.embedding, vocab.size(), dims.text_hidden, rng);
  init_tensor(pair.text.w_g3, dims.text_hidden, dims.text_hidden, rng);
  pair.text.b_g3 = RowVec::Zero(dims.text_hidden);
  init_tensor(pair.text.w_head, dims.text_hidden, dims.out, rng);
  pair.text.b_head = RowVec::Zero(dims.out);
  return pair;
}

Mat patchify(const RasterImage& image, const EncoderDims& dims) {
  const int p = dims.patch;
  if (image.width <= 0 || image.height <= 0 || image.width % p != 0 || image.height % p != 0) {
    throw DimensionError("image " + std::to_string(image.width) + "x" +
                         std::to_string(image.height) + " not divisible by patch " +
                         std::to_string(p));
  }
  const int px = image.width / p;
  const int py = image.height / p;
  Mat patches(static_cast<Index>(px) * py, dims.patch_dim());
  Index row = 0;
  for (int gy = 0; gy < py; ++gy) {
    for (int gx = 0; gx < px; ++gx, ++row) {
      Index col = 0;
      for (int y = 0; y < p; ++y) {
        for (int x = 0; x < p; ++x) {
          const Rgb rgb = image.at(gx * p + x, gy * p + y);
          patches(row, col++) = rgb[0] / 255.0;
          patches(row, col++) = rgb[1] / 255.0;
          patches(row, col++) = rgb[2] / 255.0;
        }
      }
    }
  }
  return patches;
}

std::vector<int> token_ids(const Vocabulary& vocab, const std::string& caption) {
  std::vector<int> ids;
  for (const auto& token : tokenize(caption)) ids.push_back(vocab.lookup(token));
  if (ids.empty()) ids.push_back(0);
  return ids;
}

Mat encode_images(const EncoderPair& pair, const std::vector<const RasterImage*>& images) {
  const auto n = static_cast<Index>(images.size());
  Mat pooled(n, pair.dims.hidden);
  for (Index i = 0; i < n; ++i) {
    const Mat patches = patchify(*images[static_cast<std::size_t>(i)], pair.dims);
    const Mat projected = (patches * pair.image.w_patch).rowwise() + pair.image.b_patch;
    const Mat h1 = ((projected * pair.image.w_g1).rowwise() + pair.image.b_g1).array().tanh();
    pooled.row(i) = h1.colwise().mean();
  }
  const Mat h2 = ((pooled * pair.image.w_g2).rowwise() + pair.image.b_g2).array().tanh();
  const Mat head = (h2 * pair.image.w_head).rowwise() + pair.image.b_head;
  return l2_normalize_rows(head);
}

Vec encode_image(const EncoderPair& pair, const RasterImage& image) {
  return encode_images(pair, {&image}).row(0).transpose();
}

Mat encode_texts(const EncoderPair& pair, const std::vector<std::string>& captions) {
  const auto n = static_cast<Index>(captions.size());
  Mat pooled = Mat::Zero(n, pair.dims.text_hidden);
  for (Index i = 0; i < n; ++i) {
    const auto ids = token_ids(pair.vocab, captions[static_cast<std::size_t>(i)]);
    for (int id : ids) pooled.row(i) += pair.text.embedding.row(id);
    pooled.row(i) /= static_cast<double>(ids.size());
  }
  const Mat h3 = ((pooled * pair.text.w_g3).rowwise() + pair.text.b_g3).array().tanh();
  const Mat head = (h3 * pair.text.w_head).rowwise() + pair.text.b_head;
  return l2_normalize_rows(head);
}

Vec encode_text(const EncoderPair& pair, const std::string& caption) {
  return encode_texts(pair, {caption}).row(0).transpose();
}

std::vector<TensorRef> tensor_refs(EncoderPair& pair) {
  std::vector<TensorRef> refs;
  refs.reserve(14);
  auto add_mat = [&](const char* name, ParamGroup group, Mat& m) {
    refs.push_back(TensorRef{name, group, m.data(), m.size()});
  };
  auto add_row = [&](const char* name, ParamGroup group, RowVec& v) {
    refs.push_back(TensorRef{name, group, v.data(), v.size()});
  };
  add_mat("image.w_patch", ParamGroup::G1, pair.image.w_patch);
  add_row("image.b_patch", ParamGroup::G1, pair.image.b_patch);
  add_mat("image.w_g1", ParamGroup::G1, pair.image.w_g1);
  add_row("image.b_g1", ParamGroup::G1, pair.image.b_g1);
  add_mat("image.w_g2", ParamGroup::G2, pair.image.w_g2);
  add_row("image.b_g2", ParamGroup::G2, pair.image.b_g2);
  add_mat("image.w_head", ParamGroup::Heads, pair.image.w_head);
  add_row("image.b_head", ParamGroup::Heads, pair.image.b_head);
  add_mat("text.embedding", ParamGroup::G3, pair.text.embedding);
  add_mat("text.w_g3", ParamGroup::G3, pair.text.w_g3);
  add_row("text.b_g3", ParamGroup::G3, pair.text.b_g3);
  add_mat("text.w_head", ParamGroup::Heads, pair.text.w_head);
  add_row("text.b_head", ParamGroup::Heads, pair.text.b_head);
  refs.push_back(TensorRef{"log_tau", ParamGroup::LogTau, &pair.log_temperature, 1});
  return refs;
}

std::int64_t trainable_param_count(const EncoderPair& pair) {
  auto& mutable_pair = const_cast<EncoderPair&>(pair);
  std::int64_t count = 0;
  for (const auto& ref : tensor_refs(mutable_pair)) {
    if (pair.mask.is_trainable(ref.group)) count += ref.size;
  }
  return count;
}

void save_checkpoint(const EncoderPair& pair, const std::string& path,
                     std::uint64_t config_hash) {
  auto& mutable_pair = const_cast<EncoderPair&>(pair);
  const auto refs = tensor_refs(mutable_pair);

  json tensors = json::array();
  for (const auto& ref : refs)
    tensors.push_back(json{{"name", ref.name}, {"size", ref.size}});
  json header{
      {"format", "fungi-checkpoint"},
      {"version", 1},
      {"config_hash", to_hex(config_hash)},
      {"dims",
       json{{"patch", pair.dims.patch},
            {"hidden", pair.dims.hidden},
            {"text_hidden", pair.dims.text_hidden},
            {"out", pair.dims.out}}},
      {"vocab", pair.vocab.tokens},
      {"mask", std::vector<bool>(pair.mask.trainable.begin(), pair.mask.trainable.end())},
      {"tensors", tensors},
  };
  const std::string head = header.dump();

  std::string out;
  out.append(kCheckpointMagic, sizeof(kCheckpointMagic));
  const auto head_len = static_cast<std::uint64_t>(head.size());
  out.append(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
  out += head;
  for (const auto& ref : refs) {
    out.append(reinterpret_cast<const char*>(ref.data),
               static_cast<std::size_t>(ref.size) * sizeof(double));
  }
  write_file(path, out);
}

EncoderPair load_checkpoint(const std::string& path, std::uint64_t* config_hash) {
  const std::string bytes = read_file(path);
  if (bytes.size() < sizeof(kCheckpointMagic) + sizeof(std::uint64_t) ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw IoError("not a checkpoint file: " + path);
  }
  std::uint64_t head_len = 0;
  std::memcpy(&head_len, bytes.data() + sizeof(kCheckpointMagic), sizeof(head_len));
  const std::size_t head_start = sizeof(kCheckpointMagic) + sizeof(std::uint64_t);
  if (bytes.size() < head_start + head_len) throw IoError("truncated checkpoint header: " + path);

  json header;
  try {
    header = json::parse(bytes.substr(head_start, head_len));
  } catch (const json::exception& e) {
    throw IoError("corrupt checkpoint header in " + path + ": " + e.what());
  }
  if (header.value("format", "") != "fungi-checkpoint" || header.value("version", 0) != 1)
    throw IoError("unsupported checkpoint version in " + path);

  EncoderDims dims;
  dims.patch = header.at("dims").at("patch").get<int>();
  dims.hidden = header.at("dims").at("hidden").get<int>();
  dims.text_hidden = header.at("dims").at("text_hidden").get<int>();
  dims.out = header.at("dims").at("out").get<int>();

  Vocabulary vocab;
  vocab.tokens = header.at("vocab").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < vocab.tokens.size(); ++i)
    vocab.index.emplace(vocab.tokens[i], static_cast<int>(i));

  EncoderPair pair = init_params(0, dims, vocab);
  const auto mask_bits = header.at("mask").get<std::vector<bool>>();
  if (mask_bits.size() != kNumParamGroups) throw IoError("corrupt freeze mask in " + path);
  for (std::size_t g = 0; g < mask_bits.size(); ++g) pair.mask.trainable[g] = mask_bits[g];

  const auto refs = tensor_refs(pair);
  const auto tensors = header.at("tensors");
  if (tensors.size() != refs.size()) throw IoError("tensor list mismatch in " + path);
  std::size_t offset = head_start + head_len;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto expect = tensors[i].at("size").get<Index>();
    if (expect != refs[i].size || tensors[i].at("name").get<std::string>() != refs[i].name)
      throw IoError("tensor shape mismatch in " + path + " at " + refs[i].name);
    const std::size_t nbytes = static_cast<std::size_t>(refs[i].size) * sizeof(double);
    if (bytes.size() < offset + nbytes) throw IoError("truncated checkpoint data: " + path);
    std::memcpy(refs[i].data, bytes.data() + offset, nbytes);
    offset += nbytes;
  }
  if (config_hash) {
    *config_hash = std::stoull(header.at("config_hash").get<std::string>(), nullptr, 16);
  }
  return pair;
}

}  // namespace fungi
