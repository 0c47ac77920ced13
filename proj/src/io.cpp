#include "sigppde/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace sigppde::io {

void write_path_csv(std::ostream& os, const Path& p) {
  os << std::setprecision(17) << 's';
  for (int c = 0; c < p.channels(); ++c) os << ",ch" << c;
  os << '\n';
  for (int k = 0; k < p.n_nodes(); ++k) {
    os << p.grid().node(k);
    for (int c = 0; c < p.channels(); ++c) os << ',' << p(k, c);
    os << '\n';
  }
}

Path read_path_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("path csv: empty input");
  int channels = 0;
  {
    std::istringstream hs(line);
    std::string cell;
    std::getline(hs, cell, ',');
    if (cell != "s") throw std::invalid_argument("path csv: header must start with 's'");
    while (std::getline(hs, cell, ',')) ++channels;
  }
  if (channels < 1) throw std::invalid_argument("path csv: no channels");
  std::vector<double> s;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw std::invalid_argument("path csv: bad number '" + cell + "'");
      }
    }
    if (static_cast<int>(row.size()) != channels + 1)
      throw std::invalid_argument("path csv: row " + std::to_string(rows.size() + 1) + " has the wrong width");
    s.push_back(row[0]);
    rows.emplace_back(row.begin() + 1, row.end());
  }
  if (rows.size() < 2) throw std::invalid_argument("path csv: need at least two nodes");
  const int n = static_cast<int>(rows.size()) - 1;
  const TimeGrid grid(s.front(), s.back(), n);
  for (int k = 0; k <= n; ++k)
    if (std::abs(s[static_cast<std::size_t>(k)] - grid.node(k)) > 1e-9 * grid.step())
      throw std::invalid_argument("path csv: nodes are not uniformly spaced");
  Eigen::MatrixXd v(n + 1, channels);
  for (int k = 0; k <= n; ++k)
    for (int c = 0; c < channels; ++c) v(k, c) = rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
  return Path(grid, std::move(v));
}

nlohmann::json path_to_json(const Path& p) {
  nlohmann::json values = nlohmann::json::array();
  for (int k = 0; k < p.n_nodes(); ++k) {
    std::vector<double> row(static_cast<std::size_t>(p.channels()));
    for (int c = 0; c < p.channels(); ++c) row[static_cast<std::size_t>(c)] = p(k, c);
    values.push_back(row);
  }
  return {{"grid", {{"t0", p.grid().t0()}, {"t1", p.grid().t1()}, {"n_steps", p.grid().n_steps()}}},
          {"channels", p.channels()},
          {"values", values}};
}

Path path_from_json(const nlohmann::json& j) {
  try {
    const auto& g = j.at("grid");
    const TimeGrid grid(g.at("t0").get<double>(), g.at("t1").get<double>(), g.at("n_steps").get<int>());
    const int channels = j.at("channels").get<int>();
    const auto& values = j.at("values");
    if (static_cast<int>(values.size()) != grid.n_nodes())
      throw std::invalid_argument("path json: value rows do not match the grid");
    Eigen::MatrixXd v(grid.n_nodes(), channels);
    for (int k = 0; k < grid.n_nodes(); ++k) {
      const auto row = values.at(static_cast<std::size_t>(k)).get<std::vector<double>>();
      if (static_cast<int>(row.size()) != channels) throw std::invalid_argument("path json: row width mismatch");
      for (int c = 0; c < channels; ++c) v(k, c) = row[static_cast<std::size_t>(c)];
    }
    return Path(grid, std::move(v));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("path json: ") + e.what());
  }
}

std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
}

Path load_path(const std::filesystem::path& file) {
  const std::string text = read_text(file);
  if (file.extension() == ".json") {
    try {
      return path_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument(std::string("path json: ") + e.what());
    }
  }
  std::istringstream is(text);
  return read_path_csv(is);
}

void save_path(const std::filesystem::path& file, const Path& p) {
  if (file.extension() == ".json") {
    write_text(file, path_to_json(p).dump(2) + "\n");
    return;
  }
  std::ostringstream os;
  write_path_csv(os, p);
  write_text(file, os.str());
}

std::string surfaces_csv(const GoursatSolution& sol) {
  std::ostringstream os;
  os << std::setprecision(17) << "i,j,k1,k2,k3,k4\n";
  const auto& k1 = sol.k1;
  const bool full = sol.k2.size() == k1.size();
  for (Eigen::Index i = 0; i < k1.rows(); ++i)
    for (Eigen::Index j = 0; j < k1.cols(); ++j) {
      os << i << ',' << j << ',' << k1(i, j);
      if (full) os << ',' << sol.k2(i, j) << ',' << sol.k3(i, j) << ',' << sol.k4(i, j);
      else os << ",,,";
      os << '\n';
    }
  return os.str();
}

namespace {

std::string kind_name(PpdeKind k) { return k == PpdeKind::FbmHeat ? "fbm" : "bergomi"; }

}  // namespace

void save_model(const std::filesystem::path& dir, const RecoveryModel& model) {
  if (model.basis() != Basis::Constraint) throw std::invalid_argument("save_model: only constraint-basis models");
  std::filesystem::create_directories(dir);
  const Problem& pr = model.problem();
  const auto& spec = pr.spec;
  nlohmann::json j;
  j["spec"] = {{"kind", kind_name(spec.kind)},
               {"hurst", spec.fbm.hurst},
               {"scale", spec.fbm.scale},
               {"horizon", spec.fbm.horizon},
               {"delta", spec.delta},
               {"bergomi",
                {{"xi", spec.bergomi.xi},
                 {"vol_of_vol", spec.bergomi.vol_of_vol},
                 {"rho", spec.bergomi.rho},
                 {"hurst", spec.bergomi.hurst},
                 {"spot_log", spec.bergomi.spot_log}}}};
  const auto& p = model.params();
  j["params"] = {{"sigma_t", p.sigma_t}, {"sigma_x", p.sigma_x}, {"sigma_g", p.sigma_g}, {"sigma_l", p.sigma_l}};
  j["lift"] = pr.kernel.lift.kind == Lift::Kind::Identity ? "identity" : "rbf";
  j["dyadic_order"] = pr.kernel.dyadic_order;
  j["m"] = pr.m;
  j["weights"] = std::vector<double>(model.weights().data(), model.weights().data() + model.weights().size());
  nlohmann::json pts = nlohmann::json::array();
  for (std::size_t i = 0; i < pr.size(); ++i) {
    const auto& pt = pr.points[i];
    const std::string name = "path_" + std::to_string(i) + ".csv";
    save_path(dir / name, pt.gamma);
    pts.push_back({{"t", pt.t}, {"x", std::vector<double>(pt.x.data(), pt.x.data() + pt.x.size())}, {"path", name}});
  }
  j["points"] = pts;
  write_text(dir / "model.json", j.dump(2) + "\n");
}

RecoveryModel load_model(const std::filesystem::path& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(dir / "model.json"));
    const auto& s = j.at("spec");
    PpdeSpec spec;
    const auto kind = s.at("kind").get<std::string>();
    if (kind != "fbm" && kind != "bergomi") throw std::invalid_argument("model: unknown kind " + kind);
    spec.kind = kind == "fbm" ? PpdeKind::FbmHeat : PpdeKind::RoughBergomi;
    spec.fbm = FbmSpec(s.at("hurst").get<double>(), s.at("scale").get<double>(), s.at("horizon").get<double>());
    spec.delta = s.at("delta").get<double>();
    const auto& b = s.at("bergomi");
    spec.bergomi.xi = b.at("xi").get<double>();
    spec.bergomi.vol_of_vol = b.at("vol_of_vol").get<double>();
    spec.bergomi.rho = b.at("rho").get<double>();
    spec.bergomi.hurst = b.at("hurst").get<double>();
    spec.bergomi.spot_log = b.at("spot_log").get<double>();

    const auto& pj = j.at("params");
    RbfParams params;
    params.sigma_t = pj.at("sigma_t").get<double>();
    params.sigma_x = pj.at("sigma_x").get<std::vector<double>>();
    params.sigma_g = pj.at("sigma_g").get<double>();
    params.sigma_l = pj.at("sigma_l").get<double>();
    KernelConfig kc;
    kc.params = params;
    kc.lift = j.at("lift").get<std::string>() == "rbf" ? Lift::rbf(params.sigma_g) : Lift::identity();
    kc.dyadic_order = j.at("dyadic_order").get<int>();

    const auto m = j.at("m").get<std::size_t>();
    std::vector<CollocationPoint> interior, boundary;
    const auto& pts = j.at("points");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto& pt = pts[i];
      const auto xs = pt.at("x").get<std::vector<double>>();
      Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
      auto point = spec.make_point(pt.at("t").get<double>(), x, load_path(dir / pt.at("path").get<std::string>()));
      (i < m ? interior : boundary).push_back(std::move(point));
    }
    const auto w = j.at("weights").get<std::vector<double>>();
    Eigen::VectorXd weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    auto problem = make_problem(spec, std::move(interior), std::move(boundary), kc);
    return RecoveryModel(problem, params, Basis::Constraint, std::move(weights), nullptr);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("model: ") + e.what());
  }
}

}  // namespace sigppde::io
