// SPDX-License-Identifier: Apache-2.0
#include "dktrack/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dktrack {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',' || ch == '\t' || ch == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw std::runtime_error(where + ": not a number: '" + s + "'");
  return v;
}

long parse_long(const std::string& s, const std::string& where) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::runtime_error(where + ": not an integer: '" + s + "'");
  return v;
}

}  // namespace

std::vector<BBox> parse_annotations(const std::string& text,
                                    const std::string& source_name) {
  std::vector<BBox> boxes;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = source_name + " line " + std::to_string(line_no);
    const std::vector<std::string> fields = split_fields(t);
    if (fields.size() != 4)
      throw std::runtime_error(where + ": expected 4 fields, got " +
                               std::to_string(fields.size()));
    BBox b;
    b.x = parse_double(fields[0], where);
    b.y = parse_double(fields[1], where);
    b.w = parse_double(fields[2], where);
    b.h = parse_double(fields[3], where);
    if (!(b.w > 0) || !(b.h > 0))
      throw std::runtime_error(where + ": box sides must be positive");
    boxes.push_back(b);
  }
  return boxes;
}

std::vector<BBox> load_annotation_file(const std::filesystem::path& path) {
  return parse_annotations(read_file(path), path.filename().string());
}

std::string serialize_annotations(const std::vector<BBox>& boxes) {
  std::string out;
  for (const BBox& b : boxes) {
    out += format_shortest(b.x) + "," + format_shortest(b.y) + "," +
           format_shortest(b.w) + "," + format_shortest(b.h) + "\n";
  }
  return out;
}

namespace {

// Reads one whitespace-delimited header token, skipping # comments.
std::string next_token(const std::string& data, std::size_t& pos,
                       const std::string& where) {
  while (pos < data.size()) {
    if (std::isspace(static_cast<unsigned char>(data[pos]))) {
      ++pos;
    } else if (data[pos] == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  std::size_t start = pos;
  while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos])))
    ++pos;
  if (start == pos) throw std::runtime_error(where + ": truncated header");
  return data.substr(start, pos - start);
}

}  // namespace

Tensor load_image(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  const std::string where = path.filename().string();
  std::size_t pos = 0;
  const std::string magic = next_token(data, pos, where);
  if (magic != "P5" && magic != "P6")
    throw std::runtime_error(where + ": unsupported magic '" + magic + "'");
  const long w = parse_long(next_token(data, pos, where), where);
  const long h = parse_long(next_token(data, pos, where), where);
  const long maxval = parse_long(next_token(data, pos, where), where);
  if (w <= 0 || h <= 0) throw std::runtime_error(where + ": bad dimensions");
  if (maxval <= 0 || maxval > 65535) throw std::runtime_error(where + ": bad maxval");
  if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos])))
    throw std::runtime_error(where + ": malformed header");
  ++pos;  // single whitespace byte before the raster

  const int samples = magic == "P6" ? 3 : 1;
  const int bytes_per = maxval > 255 ? 2 : 1;
  const std::size_t need =
      static_cast<std::size_t>(w) * h * samples * bytes_per;
  if (data.size() - pos < need) throw std::runtime_error(where + ": truncated raster");

  Tensor img(3, static_cast<int>(h), static_cast<int>(w));
  const unsigned char* raw =
      reinterpret_cast<const unsigned char*>(data.data()) + pos;
  const double scale = 1.0 / maxval;
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x)
      for (int s = 0; s < samples; ++s) {
        const std::size_t idx =
            (static_cast<std::size_t>(y) * w + x) * samples + s;
        long v;
        if (bytes_per == 2)
          v = (static_cast<long>(raw[2 * idx]) << 8) | raw[2 * idx + 1];
        else
          v = raw[idx];
        const double val = v * scale;
        if (samples == 3) {
          img(s, static_cast<int>(y), static_cast<int>(x)) = val;
        } else {
          for (int c = 0; c < 3; ++c)
            img(c, static_cast<int>(y), static_cast<int>(x)) = val;
        }
      }
  return img;
}

void save_image_ppm(const std::filesystem::path& path, const Tensor& img) {
  if (img.channels != 3)
    throw std::invalid_argument("save_image_ppm: expects a 3-channel tensor");
  std::string out = "P6\n" + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(img.height) * img.width * 3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = img(c, y, x);
        v = std::min(std::max(v, 0.0), 1.0);
        out.push_back(static_cast<char>(
            static_cast<unsigned char>(std::lround(v * 255.0))));
      }
  atomic_write(path, out);
}

namespace {

std::vector<int> parse_int_list(const std::string& s, const std::string& where) {
  std::vector<int> out;
  if (trim(s) == "none" || trim(s).empty()) return out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    out.push_back(static_cast<int>(parse_long(item, where)));
  }
  return out;
}

std::string join_int_list(const std::vector<int>& v) {
  if (v.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

bool parse_bool(const std::string& s, const std::string& where) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::runtime_error(where + ": not a boolean: '" + s + "'");
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& source_name) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = source_name + " line " + std::to_string(line_no);
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(where + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));

    if (key == "seed") cfg.model.seed = static_cast<std::uint64_t>(parse_long(val, where));
    else if (key == "template_size") cfg.model.template_size = static_cast<int>(parse_long(val, where));
    else if (key == "search_size") cfg.model.search_size = static_cast<int>(parse_long(val, where));
    else if (key == "patch") cfg.model.patch = static_cast<int>(parse_long(val, where));
    else if (key == "embed_ch") cfg.model.embed_ch = static_cast<int>(parse_long(val, where));
    else if (key == "backbone_blocks") cfg.model.backbone_blocks = static_cast<int>(parse_long(val, where));
    else if (key == "inject_after") cfg.model.inject_after = parse_int_list(val, where);
    else if (key == "gate_groups") cfg.model.gate_groups = static_cast<int>(parse_long(val, where));
    else if (key == "norm_mode") cfg.model.norm_mode = parse_norm_mode(val);
    else if (key == "lambda_l1") cfg.model.lambda_l1 = parse_double(val, where);
    else if (key == "lambda_giou") cfg.model.lambda_giou = parse_double(val, where);
    else if (key == "gain_count") cfg.model.gain_count = static_cast<int>(parse_long(val, where));
    else if (key == "epsilon") cfg.model.epsilon = parse_double(val, where);
    else if (key == "tau") cfg.model.tau = parse_double(val, where);
    else if (key == "rho_floor") cfg.model.rho_floor = parse_double(val, where);
    else if (key == "context_factor") cfg.model.context_factor = parse_double(val, where);
    else if (key == "use_perceptor") cfg.model.use_perceptor = parse_bool(val, where);
    else if (key == "use_encoder") cfg.model.use_encoder = parse_bool(val, where);
    else if (key == "use_prompt") cfg.model.use_prompt = parse_bool(val, where);
    else if (key == "init_x") cfg.init_box.x = parse_double(val, where);
    else if (key == "init_y") cfg.init_box.y = parse_double(val, where);
    else if (key == "init_w") cfg.init_box.w = parse_double(val, where);
    else if (key == "init_h") cfg.init_box.h = parse_double(val, where);
    else if (key == "frames") cfg.frames = static_cast<int>(parse_long(val, where));
    else if (key == "gt_dir") cfg.gt_dir = val;
    else if (key == "pred_dir") cfg.pred_dir = val;
    else if (key == "out_dir") cfg.out_dir = val;
    else if (key == "frame_path") cfg.frame_path = val;
    else if (key == "svg") cfg.svg = parse_bool(val, where);
    else if (key == "trials") cfg.trials = static_cast<int>(parse_long(val, where));
    else throw std::runtime_error(where + ": unknown key '" + key + "'");
  }
  return cfg;
}

RunConfig load_config_file(const std::filesystem::path& path) {
  return parse_config_text(read_file(path), path.filename().string());
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  auto kv = [&out](const std::string& k, const std::string& v) {
    out += k + " = " + v + "\n";
  };
  kv("seed", std::to_string(cfg.model.seed));
  kv("template_size", std::to_string(cfg.model.template_size));
  kv("search_size", std::to_string(cfg.model.search_size));
  kv("patch", std::to_string(cfg.model.patch));
  kv("embed_ch", std::to_string(cfg.model.embed_ch));
  kv("backbone_blocks", std::to_string(cfg.model.backbone_blocks));
  kv("inject_after", join_int_list(cfg.model.inject_after));
  kv("gate_groups", std::to_string(cfg.model.gate_groups));
  kv("norm_mode", norm_mode_name(cfg.model.norm_mode));
  kv("lambda_l1", format_shortest(cfg.model.lambda_l1));
  kv("lambda_giou", format_shortest(cfg.model.lambda_giou));
  kv("gain_count", std::to_string(cfg.model.gain_count));
  kv("epsilon", format_shortest(cfg.model.epsilon));
  kv("tau", format_shortest(cfg.model.tau));
  kv("rho_floor", format_shortest(cfg.model.rho_floor));
  kv("context_factor", format_shortest(cfg.model.context_factor));
  kv("use_perceptor", cfg.model.use_perceptor ? "true" : "false");
  kv("use_encoder", cfg.model.use_encoder ? "true" : "false");
  kv("use_prompt", cfg.model.use_prompt ? "true" : "false");
  kv("init_x", format_shortest(cfg.init_box.x));
  kv("init_y", format_shortest(cfg.init_box.y));
  kv("init_w", format_shortest(cfg.init_box.w));
  kv("init_h", format_shortest(cfg.init_box.h));
  kv("frames", std::to_string(cfg.frames));
  kv("gt_dir", cfg.gt_dir);
  kv("pred_dir", cfg.pred_dir);
  kv("out_dir", cfg.out_dir);
  kv("frame_path", cfg.frame_path);
  kv("svg", cfg.svg ? "true" : "false");
  kv("trials", std::to_string(cfg.trials));
  return out;
}

void apply_env_overrides(RunConfig& cfg) {
  if (const char* seed = std::getenv("DKTRACK_SEED")) {
    const std::string s(seed);
    cfg.model.seed = static_cast<std::uint64_t>(parse_long(s, "DKTRACK_SEED"));
  }
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string format_fixed(double v, int precision) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::fixed, precision);
  if (res.ec != std::errc()) throw std::runtime_error("format_fixed: value too large");
  return std::string(buf, res.ptr);
}

std::string format_shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw std::runtime_error("format_shortest failed");
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace dktrack
