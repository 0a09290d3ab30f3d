#include "safeadapt/checkpoint.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace safeadapt {

namespace fs = std::filesystem;

std::string format_double(double value) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

double parse_double(const std::string& token) {
  double value = 0.0;
  const auto res =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size())
    throw std::runtime_error("malformed number '" + token + "'");
  return value;
}

// --- SHA-1 (FIPS 180-1) ---

namespace {

std::uint32_t rol(std::uint32_t x, int n) { return (x << n) | (x >> (32 - n)); }

}  // namespace

std::string sha1_hex(std::string_view bytes) {
  std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u,
                        0xC3D2E1F0u};
  const std::uint64_t total_bits = static_cast<std::uint64_t>(bytes.size()) * 8;

  std::string padded(bytes);
  padded.push_back(static_cast<char>(0x80));
  while (padded.size() % 64 != 56) padded.push_back('\0');
  for (int i = 7; i >= 0; --i)
    padded.push_back(static_cast<char>((total_bits >> (8 * i)) & 0xff));

  std::uint32_t w[80];
  for (std::size_t block = 0; block < padded.size(); block += 64) {
    for (int t = 0; t < 16; ++t) {
      w[t] = 0;
      for (int b = 0; b < 4; ++b)
        w[t] = (w[t] << 8) |
               static_cast<unsigned char>(padded[block + 4 * t + b]);
    }
    for (int t = 16; t < 80; ++t)
      w[t] = rol(w[t - 3] ^ w[t - 8] ^ w[t - 14] ^ w[t - 16], 1);

    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int t = 0; t < 80; ++t) {
      std::uint32_t f, k;
      if (t < 20) {
        f = (b & c) | ((~b) & d);
        k = 0x5A827999u;
      } else if (t < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (t < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      const std::uint32_t temp = rol(a, 5) + f + e + k + w[t];
      e = d;
      d = c;
      c = rol(b, 30);
      b = a;
      a = temp;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }

  std::ostringstream os;
  os << std::hex;
  for (std::uint32_t x : h)
    for (int shift = 28; shift >= 0; shift -= 4) os << ((x >> shift) & 0xf);
  return os.str();
}

std::string sha1_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha1_hex(buf.str());
}

// --- network files ---

namespace {

constexpr const char* kNetHeader = "safeadapt-net v1";
constexpr const char* kExperienceHeader = "safeadapt-experience v1";
constexpr const char* kManifestHeader = "safeadapt-manifest v1";

void write_matrix(std::ostream& os, const char* label, const Mat& m) {
  os << label << "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << ' ';
      os << format_double(m(r, c));
    }
    os << "\n";
  }
}

void write_vector(std::ostream& os, const char* label, const Vec& v) {
  os << label << "\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) os << ' ';
    os << format_double(v[i]);
  }
  os << "\n";
}

void expect_label(std::istream& in, const std::string& expected,
                  const std::string& path) {
  std::string label;
  if (!(in >> label) || label != expected)
    throw std::runtime_error("'" + path + "': expected section '" + expected +
                             "', found '" + label + "'");
}

void read_matrix(std::istream& in, const std::string& label, Mat& m,
                 const std::string& path) {
  expect_label(in, label, path);
  std::string token;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!(in >> token))
        throw std::runtime_error("'" + path + "': truncated section " + label);
      m(r, c) = parse_double(token);
    }
}

void read_vector(std::istream& in, const std::string& label, Vec& v,
                 const std::string& path) {
  expect_label(in, label, path);
  std::string token;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(in >> token))
      throw std::runtime_error("'" + path + "': truncated section " + label);
    v[i] = parse_double(token);
  }
}

void check_header(std::istream& in, const char* expected,
                  const std::string& path) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("'" + path + "': empty file");
  if (line != expected)
    throw std::runtime_error("'" + path + "': format version mismatch (found '" +
                             line + "', expected '" + expected + "')");
}

}  // namespace

void save_network(const NetworkParams& net, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  os << kNetHeader << "\n";
  os << "dims " << net.input_dim() << ' ' << net.hidden_dim() << ' '
     << net.output_dim() << "\n";
  write_matrix(os, "w1", net.w1);
  write_vector(os, "b1", net.b1);
  write_matrix(os, "w2", net.w2);
  write_vector(os, "b2", net.b2);
  write_matrix(os, "w3", net.w3);
  write_vector(os, "b3", net.b3);
  if (!os) throw std::runtime_error("write failure on '" + path + "'");
}

NetworkParams load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  check_header(in, kNetHeader, path);
  expect_label(in, "dims", path);
  int input = 0, hidden = 0, output = 0;
  if (!(in >> input >> hidden >> output) || input < 1 || hidden < 1 ||
      output < 1)
    throw std::runtime_error("'" + path + "': malformed dims line");
  NetworkParams net;
  net.w1.resize(hidden, input);
  net.b1.resize(hidden);
  net.w2.resize(hidden, hidden);
  net.b2.resize(hidden);
  net.w3.resize(output, hidden);
  net.b3.resize(output);
  read_matrix(in, "w1", net.w1, path);
  read_vector(in, "b1", net.b1, path);
  read_matrix(in, "w2", net.w2, path);
  read_vector(in, "b2", net.b2, path);
  read_matrix(in, "w3", net.w3, path);
  read_vector(in, "b3", net.b3, path);
  return net;
}

void save_experience(const ExperienceDataset& data, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  os << kExperienceHeader << "\n";
  os << "episodes " << data.episodes.size() << "\n";
  Eigen::Index dim_e = 0, dim_o = 0;
  if (!data.episodes.empty() && !data.episodes.front().transitions.empty()) {
    dim_e = data.episodes.front().transitions.front().obs_ego.size();
    dim_o = data.episodes.front().transitions.front().obs_oppo.size();
  }
  os << "obs_dims " << dim_e << ' ' << dim_o << "\n";
  for (const Trajectory& ep : data.episodes) {
    os << "episode " << ep.transitions.size() << ' '
       << format_double(ep.return_ego) << "\n";
    for (const Transition& t : ep.transitions) {
      os << "t " << t.action_ego << ' ' << t.action_oppo << ' '
         << format_double(t.reward_ego) << ' ' << (t.done ? 1 : 0) << "\n";
      write_vector(os, "oe", t.obs_ego);
      write_vector(os, "oo", t.obs_oppo);
    }
  }
  if (!os) throw std::runtime_error("write failure on '" + path + "'");
}

ExperienceDataset load_experience(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  check_header(in, kExperienceHeader, path);
  expect_label(in, "episodes", path);
  std::size_t episodes = 0;
  if (!(in >> episodes))
    throw std::runtime_error("'" + path + "': malformed episodes line");
  expect_label(in, "obs_dims", path);
  Eigen::Index dim_e = 0, dim_o = 0;
  if (!(in >> dim_e >> dim_o))
    throw std::runtime_error("'" + path + "': malformed obs_dims line");

  ExperienceDataset data;
  std::string token;
  for (std::size_t e = 0; e < episodes; ++e) {
    expect_label(in, "episode", path);
    std::size_t len = 0;
    if (!(in >> len >> token))
      throw std::runtime_error("'" + path + "': malformed episode header");
    Trajectory ep;
    ep.return_ego = parse_double(token);
    for (std::size_t i = 0; i < len; ++i) {
      expect_label(in, "t", path);
      Transition t;
      int done = 0;
      if (!(in >> t.action_ego >> t.action_oppo >> token >> done))
        throw std::runtime_error("'" + path + "': malformed transition");
      t.reward_ego = parse_double(token);
      t.done = done != 0;
      t.obs_ego.resize(dim_e);
      t.obs_oppo.resize(dim_o);
      read_vector(in, "oe", t.obs_ego, path);
      read_vector(in, "oo", t.obs_oppo, path);
      ep.transitions.push_back(std::move(t));
      ++data.total_steps;
    }
    data.episodes.push_back(std::move(ep));
  }
  return data;
}

// --- artifact directories ---

namespace {

std::vector<std::pair<std::string, const NetworkParams*>> artifact_nets(
    const PhaseArtifacts& art) {
  std::vector<std::pair<std::string, const NetworkParams*>> nets;
  for (int i = 0; i < art.ego_ensemble.size(); ++i) {
    nets.emplace_back("ego_" + std::to_string(i) + ".net",
                      &art.ego_ensemble.members[static_cast<std::size_t>(i)].net);
    nets.emplace_back("ego_value_" + std::to_string(i) + ".net",
                      &art.ego_values[static_cast<std::size_t>(i)].net);
  }
  for (int i = 0; i < art.oppo_ensemble.size(); ++i) {
    nets.emplace_back(
        "oppo_" + std::to_string(i) + ".net",
        &art.oppo_ensemble.members[static_cast<std::size_t>(i)].net);
    nets.emplace_back("oppo_value_" + std::to_string(i) + ".net",
                      &art.oppo_values[static_cast<std::size_t>(i)].net);
  }
  nets.emplace_back("exploiter1.net", &art.exploiter1.net);
  nets.emplace_back("exploiter1_value.net", &art.exploiter1_value.net);
  nets.emplace_back("exploiter2.net", &art.exploiter2.net);
  nets.emplace_back("exploiter2_value.net", &art.exploiter2_value.net);
  nets.emplace_back("opponent_model.net", &art.opponent_model.policy.net);
  nets.emplace_back("opponent_model_value.net", &art.opponent_model.value.net);
  nets.emplace_back("opponent_model_disc.net", &art.opponent_model.disc.net);
  return nets;
}

}  // namespace

void save_artifacts(const PhaseArtifacts& art, const std::string& dir,
                    std::uint64_t master_seed,
                    const std::vector<std::pair<std::string, std::string>>&
                        config_entries) {
  fs::create_directories(dir);
  std::vector<std::string> files;
  for (const auto& [name, net] : artifact_nets(art)) {
    save_network(*net, dir + "/" + name);
    files.push_back(name);
  }
  save_experience(art.experience, dir + "/experience.txt");
  files.push_back("experience.txt");

  std::ofstream os(dir + "/manifest.txt");
  if (!os) throw std::runtime_error("cannot write manifest in '" + dir + "'");
  os << kManifestHeader << "\n";
  os << "master_seed " << master_seed << "\n";
  os << "ensemble_size " << art.ego_ensemble.size() << "\n";
  os << "disc_actions " << art.opponent_model.disc.num_actions << "\n";
  for (const auto& [key, value] : config_entries)
    os << "config " << key << "=" << value << "\n";
  for (const std::string& name : files)
    os << "file " << name << " sha1 " << sha1_file(dir + "/" + name) << "\n";
  if (!os) throw std::runtime_error("write failure on manifest in '" + dir + "'");
}

namespace {

struct Manifest {
  std::uint64_t master_seed = 0;
  int ensemble_size = 0;
  int disc_actions = 0;
  std::vector<std::pair<std::string, std::string>> file_hashes;
};

Manifest read_manifest(const std::string& dir) {
  const std::string path = dir + "/manifest.txt";
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("missing artifacts: cannot open '" + path + "'");
  check_header(in, kManifestHeader, path);
  Manifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string tag;
    row >> tag;
    if (tag == "master_seed") {
      row >> m.master_seed;
    } else if (tag == "ensemble_size") {
      row >> m.ensemble_size;
    } else if (tag == "disc_actions") {
      row >> m.disc_actions;
    } else if (tag == "config") {
      // resolved configuration is informative here; ignored on load
    } else if (tag == "file") {
      std::string name, sha_tag, hash;
      row >> name >> sha_tag >> hash;
      if (sha_tag != "sha1" || hash.size() != 40)
        throw std::runtime_error("'" + path + "': malformed file line");
      m.file_hashes.emplace_back(name, hash);
    } else {
      throw std::runtime_error("'" + path + "': unknown manifest tag '" + tag +
                               "'");
    }
    if (row.fail())
      throw std::runtime_error("'" + path + "': malformed line '" + line + "'");
  }
  if (m.ensemble_size < 1)
    throw std::runtime_error("'" + path + "': missing ensemble_size");
  return m;
}

}  // namespace

void verify_artifact_hashes(const std::string& dir) {
  const Manifest m = read_manifest(dir);
  for (const auto& [name, expected] : m.file_hashes) {
    const std::string actual = sha1_file(dir + "/" + name);
    if (actual != expected)
      throw std::runtime_error("hash mismatch for '" + dir + "/" + name +
                               "': manifest " + expected + ", recomputed " +
                               actual);
  }
}

PhaseArtifacts load_artifacts(const std::string& dir) {
  const Manifest m = read_manifest(dir);
  verify_artifact_hashes(dir);

  PhaseArtifacts art;
  for (int i = 0; i < m.ensemble_size; ++i) {
    art.ego_ensemble.members.push_back(
        PolicyParams{load_network(dir + "/ego_" + std::to_string(i) + ".net")});
    art.ego_values.push_back(ValueParams{
        load_network(dir + "/ego_value_" + std::to_string(i) + ".net")});
    art.oppo_ensemble.members.push_back(PolicyParams{
        load_network(dir + "/oppo_" + std::to_string(i) + ".net")});
    art.oppo_values.push_back(ValueParams{
        load_network(dir + "/oppo_value_" + std::to_string(i) + ".net")});
  }
  art.exploiter1 = PolicyParams{load_network(dir + "/exploiter1.net")};
  art.exploiter1_value = ValueParams{load_network(dir + "/exploiter1_value.net")};
  art.exploiter2 = PolicyParams{load_network(dir + "/exploiter2.net")};
  art.exploiter2_value = ValueParams{load_network(dir + "/exploiter2_value.net")};
  art.opponent_model.policy =
      PolicyParams{load_network(dir + "/opponent_model.net")};
  art.opponent_model.value =
      ValueParams{load_network(dir + "/opponent_model_value.net")};
  art.opponent_model.disc = Discriminator{
      load_network(dir + "/opponent_model_disc.net"), m.disc_actions};
  art.experience = load_experience(dir + "/experience.txt");
  return art;
}

}  // namespace safeadapt
