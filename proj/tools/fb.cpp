// fb: command-line front end for the Fisher-Bingham normalizing-constant
// library. Talks to the library exclusively through the public C API.
//
// Subcommands:
//   normconst    Z(x, y, r) with statistical error propagation
//   mle          maximum-likelihood fit of unit-sphere data
//   sample       exact rejection sampling
//   check        built-in validation suite
//   bench-table1 normalizing-constant sweep over a diagonal family
//
// Exit codes: 0 success, 1 usage/validation error, 2 evaluation failure,
// 3 estimation failure, 4 check-suite failure.

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fisher_bingham.h"
#include "json.hpp"

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitEval = 2;
constexpr int kExitMle = 3;
constexpr int kExitCheck = 4;

[[noreturn]] void die(int code, const std::string& msg) {
  std::cerr << "fb: " << msg << "\n";
  std::exit(code);
}

int exit_code_for(fb_status s) {
  switch (s) {
    case FB_OK:
      return 0;
    case FB_ERR_INVALID_ARGUMENT:
      return kExitUsage;
    case FB_ERR_MLE_FAILED:
      return kExitMle;
    case FB_ERR_CHECK_FAILED:
      return kExitCheck;
    default:
      return kExitEval;
  }
}

[[noreturn]] void die_status(fb_status s) {
  die(exit_code_for(s), fb_last_error());
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      die(kExitUsage, std::string("cannot parse ") + what + " entry '" + item + "'");
    }
  }
  if (out.empty()) die(kExitUsage, std::string(what) + " list is empty");
  return out;
}

bool looks_like_list(const std::string& text) {
  for (char c : text)
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == ',' ||
          c == '.' || c == '-' || c == '+' || c == 'e' || c == 'E' ||
          std::isspace(static_cast<unsigned char>(c))))
      return false;
  return !text.empty();
}

struct OwnedParams {
  fb_params* p = nullptr;
  ~OwnedParams() { fb_params_destroy(p); }
};

struct OwnedOptions {
  fb_options* o = nullptr;
  OwnedOptions() : o(fb_options_create()) {
    if (o == nullptr) die(kExitEval, "cannot allocate options");
  }
  ~OwnedOptions() { fb_options_destroy(o); }
};

void set_opt(fb_options* o, const char* key, double value) {
  fb_status s = fb_options_set(o, key, value);
  if (s != FB_OK) die(kExitUsage, fb_last_error());
}

// --x accepts either a comma-separated diagonal (d+1 values) or a path to a
// file holding the full symmetric quadratic-form matrix: d+1 lines of d+1
// comma-separated reals. Asymmetry beyond 1e-12 is averaged away with a
// warning on stderr.
fb_params* make_params(int d, const std::string& xspec,
                       const std::vector<double>& y, double r) {
  if (looks_like_list(xspec)) {
    std::vector<double> diag = parse_list(xspec, "--x");
    if (static_cast<int>(diag.size()) != d + 1)
      die(kExitUsage, "--x diagonal needs " + std::to_string(d + 1) +
                          " values, got " + std::to_string(diag.size()));
    std::vector<double> m(static_cast<size_t>(d + 1) * (d + 1), 0.0);
    for (int i = 0; i <= d; ++i) m[i * (d + 1) + i] = diag[i];
    return fb_params_create_matrix(d, m.data(), y.data(), r);
  }
  std::ifstream in(xspec);
  if (!in) die(kExitUsage, "cannot open matrix file " + xspec);
  std::vector<double> m;
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row = parse_list(line, "matrix row");
    if (static_cast<int>(row.size()) != d + 1)
      die(kExitUsage, "matrix row " + std::to_string(rows + 1) + " has " +
                          std::to_string(row.size()) + " entries, expected " +
                          std::to_string(d + 1));
    m.insert(m.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows != d + 1)
    die(kExitUsage, "matrix file has " + std::to_string(rows) +
                        " rows, expected " + std::to_string(d + 1));
  double asym = 0.0;
  for (int i = 0; i <= d; ++i)
    for (int j = i + 1; j <= d; ++j)
      asym = std::max(asym,
                      std::abs(m[i * (d + 1) + j] - m[j * (d + 1) + i]));
  if (asym > 1e-12)
    std::cerr << "fb: warning: matrix asymmetry " << format_double(asym)
              << " exceeds 1e-12; using (x + x')/2\n";
  for (int i = 0; i <= d; ++i)
    for (int j = i + 1; j <= d; ++j) {
      double avg = 0.5 * (m[i * (d + 1) + j] + m[j * (d + 1) + i]);
      m[i * (d + 1) + j] = m[j * (d + 1) + i] = avg;
    }
  return fb_params_create_matrix(d, m.data(), y.data(), r);
}

// ---------------------------------------------------------------------------
// Configuration file: JSON object whose keys mirror the option keys, plus
// "seed", "format", "order_cap", and nested "ode"/"mle" objects. Unknown
// keys are rejected. Command-line flags override file values.
// ---------------------------------------------------------------------------

struct RunConfig {
  OwnedOptions options;
  std::uint64_t seed = 0;
  std::string format = "json";
  int order_cap = 80;
  double tol = 1e-10;
  double eps = 0.0;
  int replicas = 200;
  double confidence = 0.95;
  double grad_tol = 1e-5;
  int starts = 8;
  int max_iters = 2000;
  long check_n = 1000000;

  void push_down() {
    set_opt(options.o, "tol", tol);
    set_opt(options.o, "eps", eps);
    set_opt(options.o, "replicas", static_cast<double>(replicas));
    set_opt(options.o, "confidence", confidence);
    set_opt(options.o, "mle_starts", static_cast<double>(starts));
    set_opt(options.o, "mle_grad_tol", grad_tol);
    set_opt(options.o, "mle_max_iters", static_cast<double>(max_iters));
    set_opt(options.o, "check_n", static_cast<double>(check_n));
    fb_options_set_seed(options.o, seed);
  }
};

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) die(kExitUsage, "cannot open config file " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    die(kExitUsage, std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) die(kExitUsage, "config root must be a JSON object");

  auto num = [&](const ordered_json& v, const std::string& key) -> double {
    if (!v.is_number())
      die(kExitUsage, "config key '" + key + "' must be a number");
    return v.get<double>();
  };
  for (auto& [key, value] : j.items()) {
    if (key == "tol") cfg.tol = num(value, key);
    else if (key == "eps") cfg.eps = num(value, key);
    else if (key == "replicas") cfg.replicas = static_cast<int>(num(value, key));
    else if (key == "confidence") cfg.confidence = num(value, key);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(num(value, key));
    else if (key == "order_cap") cfg.order_cap = static_cast<int>(num(value, key));
    else if (key == "check_n") cfg.check_n = static_cast<long>(num(value, key));
    else if (key == "format") {
      if (!value.is_string()) die(kExitUsage, "config key 'format' must be a string");
      cfg.format = value.get<std::string>();
    } else if (key == "ode") {
      if (!value.is_object()) die(kExitUsage, "config key 'ode' must be an object");
      for (auto& [okey, ovalue] : value.items()) {
        if (okey == "abs_tol_coeff") set_opt(cfg.options.o, "ode_abs_tol_coeff", num(ovalue, okey));
        else if (okey == "rel_tol") set_opt(cfg.options.o, "ode_rel_tol", num(ovalue, okey));
        else if (okey == "initial_step") set_opt(cfg.options.o, "ode_initial_step", num(ovalue, okey));
        else if (okey == "max_steps") set_opt(cfg.options.o, "ode_max_steps", num(ovalue, okey));
        else die(kExitUsage, "unknown config key 'ode." + okey + "'");
      }
    } else if (key == "mle") {
      if (!value.is_object()) die(kExitUsage, "config key 'mle' must be an object");
      for (auto& [mkey, mvalue] : value.items()) {
        if (mkey == "starts") cfg.starts = static_cast<int>(num(mvalue, mkey));
        else if (mkey == "grad_tol") cfg.grad_tol = num(mvalue, mkey);
        else if (mkey == "max_iters") cfg.max_iters = static_cast<int>(num(mvalue, mkey));
        else if (mkey == "max_step_norm") set_opt(cfg.options.o, "mle_max_step_norm", num(mvalue, mkey));
        else if (mkey == "nm_diameter_tol") set_opt(cfg.options.o, "mle_nm_diameter_tol", num(mvalue, mkey));
        else if (mkey == "eval_tol") set_opt(cfg.options.o, "mle_eval_tol", num(mvalue, mkey));
        else die(kExitUsage, "unknown config key 'mle." + mkey + "'");
      }
    } else {
      die(kExitUsage, "unknown config key '" + key + "'");
    }
  }
  if (cfg.format != "json" && cfg.format != "csv" && cfg.format != "text")
    die(kExitUsage, "config format must be json, csv, or text");
}

void print_kv(const std::string& format, const ordered_json& obj,
              bool header) {
  if (format == "json") {
    std::cout << obj.dump(2) << "\n";
    return;
  }
  if (format == "csv") {
    std::string names, values;
    bool first = true;
    for (auto& [key, value] : obj.items()) {
      if (!first) {
        names += ",";
        values += ",";
      }
      first = false;
      names += key;
      if (value.is_number_float())
        values += format_double(value.get<double>());
      else if (value.is_array()) {
        std::string flat;
        for (size_t k = 0; k < value.size(); ++k) {
          if (k) flat += ";";
          flat += value[k].is_number_float()
                      ? format_double(value[k].get<double>())
                      : value[k].dump();
        }
        values += flat;
      } else if (value.is_string())
        values += value.get<std::string>();
      else
        values += value.dump();
    }
    if (header) std::cout << names << "\n";
    std::cout << values << "\n";
    return;
  }
  // text
  for (auto& [key, value] : obj.items()) {
    std::cout << key << " = ";
    if (value.is_number_float())
      std::cout << format_double(value.get<double>());
    else
      std::cout << value.dump();
    std::cout << "\n";
  }
}

// ---------------------------------------------------------------------------
// Subcommand implementations
// ---------------------------------------------------------------------------

int cmd_normconst(int d, const std::string& xspec, const std::string& yspec,
                  double r, RunConfig& cfg, bool header) {
  std::vector<double> y = parse_list(yspec, "--y");
  if (static_cast<int>(y.size()) != d + 1)
    die(kExitUsage, "--y needs " + std::to_string(d + 1) + " values");
  cfg.push_down();
  OwnedParams params;
  params.p = make_params(d, xspec, y, r);
  if (params.p == nullptr) die(kExitUsage, fb_last_error());

  fb_normconst_result res;
  fb_status s = fb_normconst(params.p, cfg.options.o, &res);
  if (s != FB_OK) die_status(s);
  if (res.series_order > cfg.order_cap)
    die(kExitEval, "series order " + std::to_string(res.series_order) +
                       " exceeds the configured cap " +
                       std::to_string(cfg.order_cap));

  ordered_json out;
  out["value"] = res.value;
  out["sd"] = res.sd;
  out["ci"] = {res.ci_low, res.ci_high};
  out["route"] = res.route;
  out["series_order"] = res.series_order;
  out["r1"] = res.r1;
  print_kv(cfg.format, out, header);
  return 0;
}

int cmd_mle(const std::string& datafile, int dim_flag, RunConfig& cfg,
            bool header) {
  std::ifstream in(datafile);
  if (!in) die(kExitUsage, "cannot open data file " + datafile);
  std::vector<double> points;
  int cols = -1;
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row = parse_list(line, "data row");
    if (cols < 0) cols = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != cols)
      die(kExitUsage, "data row " + std::to_string(rows + 1) +
                          " has inconsistent column count");
    points.insert(points.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0 || cols < 2) die(kExitUsage, "data file is empty");
  int d = cols - 1;
  if (dim_flag > 0 && dim_flag != d)
    die(kExitUsage, "--dim disagrees with the data file column count");
  cfg.push_down();

  fb_mle_result res;
  fb_status s = fb_mle(d, rows, points.data(), cfg.options.o, &res);
  if (s != FB_OK) die_status(s);

  ordered_json out;
  out["x"] = std::vector<double>(res.x, res.x + fb_ut_size(d));
  out["y"] = std::vector<double>(res.y, res.y + d + 1);
  out["loglik"] = res.loglik;
  out["grad_norm"] = res.grad_norm;
  out["iters"] = res.iters;
  out["restarts"] = res.restarts;
  out["status"] = res.status;
  print_kv(cfg.format, out, header);
  return 0;
}

int cmd_sample(int d, const std::string& xspec, const std::string& yspec,
               int n, RunConfig& cfg, const std::string& outfile) {
  std::vector<double> y = parse_list(yspec, "--y");
  if (static_cast<int>(y.size()) != d + 1)
    die(kExitUsage, "--y needs " + std::to_string(d + 1) + " values");
  OwnedParams params;
  params.p = make_params(d, xspec, y, 1.0);
  if (params.p == nullptr) die(kExitUsage, fb_last_error());

  std::vector<double> pts(static_cast<size_t>(n) * (d + 1));
  fb_status s = fb_sample(params.p, n, cfg.seed, pts.data(),
                          static_cast<int>(pts.size()));
  if (s != FB_OK) die_status(s);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!outfile.empty()) {
    file.open(outfile, std::ios::binary);  // binary keeps LF on all hosts
    if (!file) die(kExitUsage, "cannot open output file " + outfile);
    os = &file;
  }
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j <= d; ++j) {
      if (j) *os << ",";
      *os << format_double(pts[static_cast<size_t>(k) * (d + 1) + j]);
    }
    *os << "\n";
  }
  return 0;
}

int cmd_check(const std::vector<int>& dims, RunConfig& cfg) {
  cfg.push_down();
  if (!dims.empty()) {
    fb_status s = fb_options_set_check_dims(cfg.options.o, dims.data(),
                                            static_cast<int>(dims.size()));
    if (s != FB_OK) die(kExitUsage, fb_last_error());
  }
  std::vector<char> report(1 << 16);
  int len = static_cast<int>(report.size());
  fb_status s = fb_check(cfg.options.o, report.data(), &len);
  if (s == FB_ERR_BUFFER_TOO_SMALL) {
    report.resize(static_cast<size_t>(len));
    s = fb_check(cfg.options.o, report.data(), &len);
  }
  if (s != FB_OK && s != FB_ERR_CHECK_FAILED) die_status(s);

  if (cfg.format == "json") {
    ordered_json arr = ordered_json::array();
    std::stringstream ss(report.data());
    std::string line;
    while (std::getline(ss, line)) {
      if (line.size() < 5) continue;
      bool pass = line.rfind("PASS ", 0) == 0;
      std::string rest = line.substr(5);
      size_t colon = rest.find(": ");
      ordered_json item;
      item["name"] = colon == std::string::npos ? rest : rest.substr(0, colon);
      item["pass"] = pass;
      item["detail"] =
          colon == std::string::npos ? "" : rest.substr(colon + 2);
      arr.push_back(item);
    }
    std::cout << arr.dump(2) << "\n";
  } else {
    std::cout << report.data();
  }
  return s == FB_OK ? 0 : kExitCheck;
}

int cmd_bench_table1(RunConfig& cfg, bool header) {
  cfg.push_down();
  if (cfg.eps <= 0.0) set_opt(cfg.options.o, "eps", 1e-5);
  const int d = 4;
  std::vector<double> y = {1.5, 1.2, 0.9, 0.6, 0.3};
  if (header) std::cout << "x11,value,sd\n";
  for (int step = 1; step <= 20; ++step) {
    double x11 = 0.5 * step;
    std::vector<double> m(25, 0.0);
    for (int i = 0; i < 5; ++i) m[i * 5 + i] = x11 * (i + 1);
    OwnedParams params;
    params.p = fb_params_create_matrix(d, m.data(), y.data(), 1.0);
    if (params.p == nullptr) die(kExitEval, fb_last_error());
    fb_normconst_result res;
    fb_status s = fb_normconst(params.p, cfg.options.o, &res);
    if (s != FB_OK) die_status(s);
    std::cout << format_double(x11) << "," << format_double(res.value) << ","
              << format_double(res.sd) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fisher-Bingham normalizing constants, derivatives, MLE, and "
               "sampling on the d-sphere"};
  app.set_version_flag("--version", fb_version());
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON config file (flags override file values)");

  // Shared flags live per-subcommand so CLI11 reports accurate usage.
  int dim = 0;
  std::string xspec, yspec, datafile, outfile;
  double r = 1.0;
  int nsamples = 100;
  bool header = false;
  std::vector<int> check_dims;

  auto add_common = [&](CLI::App* sub, bool with_model) {
    sub->add_option("--seed", cfg.seed, "random seed");
    sub->add_option("--format", cfg.format, "output format: json, csv, text")
        ->check(CLI::IsMember({"json", "csv", "text"}));
    sub->add_flag("--header", header, "include a header row in CSV output");
    if (with_model) {
      sub->add_option("--dim", dim, "sphere dimension d")->required();
      sub->add_option("--x", xspec,
                      "diagonal list (d+1 values) or symmetric matrix file")
          ->required();
      sub->add_option("--y", yspec, "linear coefficients (d+1 values)")
          ->required();
    }
  };

  CLI::App* nc = app.add_subcommand("normconst", "normalizing constant");
  add_common(nc, true);
  nc->add_option("--r", r, "sphere radius");
  nc->add_option("--tol", cfg.tol, "series truncation target");
  nc->add_option("--eps", cfg.eps, "ensemble perturbation size");
  nc->add_option("--replicas", cfg.replicas, "ensemble replicas");
  nc->add_option("--confidence", cfg.confidence, "CI level");

  CLI::App* ml = app.add_subcommand("mle", "maximum-likelihood fit");
  add_common(ml, false);
  ml->add_option("--data", datafile, "CSV of unit-sphere points")->required();
  ml->add_option("--dim", dim, "sphere dimension d (checked against data)");
  ml->add_option("--starts", cfg.starts, "optimizer starts");
  ml->add_option("--grad-tol", cfg.grad_tol, "gradient tolerance per sample");
  ml->add_option("--max-iters", cfg.max_iters, "ascent iteration cap");

  CLI::App* sm = app.add_subcommand("sample", "exact rejection sampling");
  add_common(sm, true);
  sm->add_option("--n", nsamples, "number of samples")->required();
  sm->add_option("--out", outfile, "output CSV path (default stdout)");

  CLI::App* ck = app.add_subcommand("check", "built-in validation suite");
  add_common(ck, false);
  ck->add_option("--dims", check_dims, "dimensions to exercise")
      ->delimiter(',');
  ck->add_option("--n", cfg.check_n, "Monte-Carlo samples per check");

  CLI::App* bt = app.add_subcommand("bench-table1",
                                    "diagonal-family normalizing sweep");
  add_common(bt, false);
  bt->add_option("--eps", cfg.eps, "ensemble perturbation size");
  bt->add_option("--replicas", cfg.replicas, "ensemble replicas");
  bt->add_option("--tol", cfg.tol, "series truncation target");

  // Config file must be applied before flag values land, so parse in two
  // passes: find --config first, load it, then let flags override.
  for (int k = 1; k < argc - 1; ++k)
    if (std::string(argv[k]) == "--config") config_path = argv[k + 1];
  if (!config_path.empty()) apply_config_file(cfg, config_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  if (nc->parsed()) return cmd_normconst(dim, xspec, yspec, r, cfg, header);
  if (ml->parsed()) return cmd_mle(datafile, dim, cfg, header);
  if (sm->parsed()) return cmd_sample(dim, xspec, yspec, nsamples, cfg, outfile);
  if (ck->parsed()) return cmd_check(check_dims, cfg);
  if (bt->parsed()) return cmd_bench_table1(cfg, header);
  return kExitUsage;
}
