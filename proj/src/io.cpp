#include "polycond/io.hpp"

#include "polycond/subspace.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace polycond {

std::string format_double(double v) {
  std::array<char, 32> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// one block of `alpha_1 ... alpha_n : coefficient` lines
HomogeneousPolynomial parse_poly_block(const std::vector<std::string>& lines, int n, int d) {
  HomogeneousPolynomial p(n, d);
  std::vector<int> alpha(n);
  for (const auto& raw : lines) {
    std::string line = trim(raw);
    if (line.empty()) continue;
    std::istringstream ls(line);
    for (int j = 0; j < n; ++j)
      if (!(ls >> alpha[j]))
        throw std::invalid_argument("polynomial line has too few exponents: " + line);
    std::string colon;
    double c;
    if (!(ls >> colon >> c) || colon != ":")
      throw std::invalid_argument("malformed polynomial line: " + line);
    p.set_coeff(alpha, c);
  }
  return p;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::string tok;
  std::istringstream in(s);
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    out.push_back(std::stoi(tok));
  }
  return out;
}

}  // namespace

std::string polynomial_to_string(const HomogeneousPolynomial& p) {
  std::ostringstream os;
  const auto& E = p.basis().exponents();
  for (int k = 0; k < p.dim(); ++k) {
    if (p.coeffs()[k] == 0.0) continue;
    for (int j = 0; j < p.n(); ++j) os << E(k, j) << " ";
    os << ": " << format_double(p.coeffs()[k]) << "\n";
  }
  return os.str();
}

std::string system_to_string(const PolynomialSystem& P) {
  std::ostringstream os;
  os << "n=" << P.n() << " degrees=";
  for (int i = 0; i < P.size(); ++i) os << (i ? "," : "") << P.degree_pattern()[i];
  os << "\n";
  for (int i = 0; i < P.size(); ++i) {
    if (i) os << "---\n";
    os << polynomial_to_string(P.poly(i));
  }
  return os.str();
}

PolynomialSystem system_from_string(const std::string& text) {
  auto lines = split_lines(text);
  std::size_t k = 0;
  while (k < lines.size() && trim(lines[k]).empty()) ++k;
  if (k == lines.size()) throw std::invalid_argument("empty system file");
  std::string header = trim(lines[k]);
  int n = 0;
  std::vector<int> degrees;
  {
    std::istringstream hs(header);
    std::string tok;
    while (hs >> tok) {
      if (tok.rfind("n=", 0) == 0) n = std::stoi(tok.substr(2));
      else if (tok.rfind("degrees=", 0) == 0) degrees = parse_int_list(tok.substr(8));
    }
  }
  if (n < 2 || degrees.empty())
    throw std::invalid_argument("system header must carry n= and degrees=: " + header);
  ++k;
  std::vector<std::vector<std::string>> blocks(1);
  for (; k < lines.size(); ++k) {
    if (trim(lines[k]) == "---") blocks.emplace_back();
    else blocks.back().push_back(lines[k]);
  }
  if (blocks.size() != degrees.size())
    throw std::invalid_argument("system file has wrong number of polynomial blocks");
  std::vector<HomogeneousPolynomial> polys;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    polys.push_back(parse_poly_block(blocks[i], n, degrees[i]));
  return PolynomialSystem(std::move(polys));
}

PolynomialSystem load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open system file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return system_from_string(ss.str());
}

void save_system(const std::string& path, const PolynomialSystem& P) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write system file: " + path);
  out << system_to_string(P);
}

std::string subspace_to_string(const PolySubspace& F) {
  std::ostringstream os;
  os << "n=" << F.n() << " d=" << F.d() << " m=" << F.dim() << "\n";
  for (int i = 0; i < F.dim(); ++i) {
    if (i) os << "---\n";
    os << polynomial_to_string(F.basis()[static_cast<std::size_t>(i)]);
  }
  return os.str();
}

PolySubspace subspace_from_string(const std::string& text) {
  auto lines = split_lines(text);
  std::size_t k = 0;
  while (k < lines.size() && trim(lines[k]).empty()) ++k;
  if (k == lines.size()) throw std::invalid_argument("empty subspace file");
  int n = 0, d = -1, m = 0;
  {
    std::istringstream hs(trim(lines[k]));
    std::string tok;
    while (hs >> tok) {
      if (tok.rfind("n=", 0) == 0) n = std::stoi(tok.substr(2));
      else if (tok.rfind("d=", 0) == 0) d = std::stoi(tok.substr(2));
      else if (tok.rfind("m=", 0) == 0) m = std::stoi(tok.substr(2));
    }
  }
  if (n < 2 || d < 0 || m < 1)
    throw std::invalid_argument("subspace header must carry n=, d=, m=");
  ++k;
  std::vector<std::vector<std::string>> blocks(1);
  for (; k < lines.size(); ++k) {
    if (trim(lines[k]) == "---") blocks.emplace_back();
    else blocks.back().push_back(lines[k]);
  }
  if (static_cast<int>(blocks.size()) != m)
    throw std::invalid_argument("subspace file has wrong number of basis blocks");
  MatrixXd coords(m, hd_dimension(n, d));
  for (int i = 0; i < m; ++i)
    coords.row(i) = parse_poly_block(blocks[static_cast<std::size_t>(i)], n, d).bw_coords().transpose();
  return PolySubspace(n, d, std::move(coords), true);
}

PolySubspace load_subspace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open subspace file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return subspace_from_string(ss.str());
}

void save_subspace(const std::string& path, const PolySubspace& F) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write subspace file: " + path);
  out << subspace_to_string(F);
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  for (const auto& raw : split_lines(text)) {
    std::string line = raw;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line is not `key = value`: " + raw);
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace polycond
