// triguard: command-line front end over the C API.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "triguard/triguard.h"

namespace fs = std::filesystem;

namespace {

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "cannot read " << path << "\n";
    std::exit(2);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Artifacts land in place only after a complete write.
void write_atomic(const std::string& path, const std::string& content) {
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write " << path << "\n";
      std::exit(2);
    }
    out << content;
  }
  fs::rename(tmp, target);
}

[[noreturn]] void die(int code) {
  std::cerr << "error: " << tg_last_error() << "\n";
  std::exit(code == TG_ERR_SYNTAX || code == TG_ERR_ARITY || code == TG_ERR_IO ? 2 : 2);
}

struct Loaded {
  tg_signature* sig = nullptr;
  tg_formula* f = nullptr;
};

Loaded load_formula_file(const std::string& path) {
  Loaded out;
  std::string text = read_input(path);
  int rc = tg_formula_load(text.c_str(), &out.sig, &out.f);
  if (rc != TG_OK) die(rc);
  return out;
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  tg_string_free(s);
  return out;
}

int cmd_parse(const std::string& file) {
  Loaded in = load_formula_file(file);
  char* sig_text = nullptr;
  char* f_text = nullptr;
  tg_signature_format(in.sig, &sig_text);
  tg_formula_print(in.f, &f_text);
  std::cout << take_string(sig_text) << take_string(f_text) << "\n";
  return 0;
}

int cmd_classify(const std::string& file) {
  Loaded in = load_formula_file(file);
  char* json = nullptr;
  int rc = tg_classify(in.f, in.sig, &json);
  if (rc != TG_OK) die(rc);
  std::cout << take_string(json) << "\n";
  return 0;
}

int cmd_normalize(const std::string& file, bool tg, const std::string& out_dir, int limit) {
  Loaded in = load_formula_file(file);
  tg_nf_iter* it = nullptr;
  int rc = tg_normalize_begin(in.f, in.sig, tg ? 1 : 0, &it);
  if (rc != TG_OK) die(rc);
  int n = 0;
  for (;;) {
    if (limit > 0 && n >= limit) break;
    char* text = nullptr;
    rc = tg_normalize_next(it, &text);
    if (rc == TG_ABSENT) break;
    if (rc != TG_OK) die(rc);
    std::string body = take_string(text);
    if (out_dir.empty()) {
      std::cout << "# disjunct " << n << "\n" << body << "\n";
    } else {
      fs::create_directories(out_dir);
      std::ostringstream name;
      name << out_dir << "/disjunct_" << n << ".gf";
      write_atomic(name.str(), body);
    }
    ++n;
  }
  tg_nf_iter_free(it);
  if (!out_dir.empty()) std::cout << n << " disjunct(s) written to " << out_dir << "\n";
  return n > 0 ? 0 : 1;
}

int cmd_check(const std::string& model_path, const std::string& formula_path, bool ubiquitous,
              bool transitive) {
  Loaded in = load_formula_file(formula_path);
  std::string jsonl = read_input(model_path);
  tg_structure* s = nullptr;
  int rc = tg_structure_parse(in.sig, jsonl.c_str(), &s);
  if (rc != TG_OK) die(rc);
  int flags = (ubiquitous ? 1 : 0) | (transitive ? 2 : 0);
  int verdict = 0;
  char* report = nullptr;
  rc = tg_check(s, in.f, in.sig, flags, &verdict, &report);
  if (rc != TG_OK) die(rc);
  std::cout << take_string(report) << "\n";
  return verdict ? 0 : 1;
}

int cmd_find(const std::string& formula_path, int max_size, bool ubiquitous, bool transitive,
             bool ramified, int max_fact_elems, const std::string& out_path) {
  Loaded in = load_formula_file(formula_path);
  nlohmann::json cfg = {{"max_size", max_size},
                        {"ubiquitous", ubiquitous},
                        {"transitive", transitive},
                        {"ramified", ramified}};
  if (max_fact_elems > 0) cfg["max_fact_elems"] = max_fact_elems;
  tg_structure* s = nullptr;
  int rc = tg_find(in.f, in.sig, cfg.dump().c_str(), &s);
  if (rc == TG_ABSENT) {
    std::cout << "unsat within bound " << max_size << "\n";
    return 1;
  }
  if (rc != TG_OK) die(rc);
  char* jsonl = nullptr;
  tg_structure_format(s, &jsonl);
  std::string body = take_string(jsonl);
  if (out_path.empty())
    std::cout << body;
  else
    write_atomic(out_path, body);
  std::cout << "model of size " << tg_structure_size(s) << "\n";
  tg_structure_free(s);
  return 0;
}

int cmd_saturate(const std::string& formula_path, int max_seed, bool tg, bool check_steps,
                 const std::string& out_path, const std::string& trace_path) {
  Loaded in = load_formula_file(formula_path);
  nlohmann::json opts = {{"max_seed_size", max_seed}, {"tg", tg}, {"check_steps", check_steps}};
  if (!trace_path.empty()) opts["trace_path"] = trace_path;
  tg_structure* model = nullptr;
  char* stats = nullptr;
  int rc = tg_saturate(in.f, in.sig, opts.dump().c_str(), &model, &stats);
  if (rc == TG_ABSENT) {
    std::cout << "no seed model within bound " << max_seed << "\n";
    return 1;
  }
  if (rc != TG_OK) die(rc);
  std::cout << take_string(stats) << "\n";
  if (!out_path.empty()) {
    char* jsonl = nullptr;
    tg_structure_format(model, &jsonl);
    write_atomic(out_path, take_string(jsonl));
  }
  tg_structure_free(model);
  return 0;
}

int cmd_finsat(const std::string& formula_path, const std::string& logic, int alpha_max,
               int beta_max, int find_max, const std::string& cert_path) {
  Loaded in = load_formula_file(formula_path);
  nlohmann::json opts = {{"logic", logic},
                         {"alpha_max", alpha_max},
                         {"beta_max", beta_max},
                         {"find_max", find_max}};
  tg_structure* cert = nullptr;
  char* stats = nullptr;
  int rc = tg_finsat(in.f, in.sig, opts.dump().c_str(), &cert, &stats);
  if (rc == TG_ABSENT) {
    std::cout << take_string(stats) << "\n";
    return 1;
  }
  if (rc != TG_OK) die(rc);
  std::cout << take_string(stats) << "\n";
  if (cert && !cert_path.empty()) {
    char* jsonl = nullptr;
    tg_structure_format(cert, &jsonl);
    write_atomic(cert_path, take_string(jsonl));
  }
  if (cert) tg_structure_free(cert);
  return 0;
}

int cmd_corpus(const std::string& dir, const std::string& out_csv) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".gf") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::ostringstream csv;
  csv << "instance,verdict,model_size,steps,wall_ms\n";
  for (const auto& path : files) {
    auto started = std::chrono::steady_clock::now();
    Loaded in = load_formula_file(path.string());
    char* cls = nullptr;
    tg_classify(in.f, in.sig, &cls);
    auto rep = nlohmann::json::parse(take_string(cls));
    std::string verdict = "error";
    long long model_size = -1, steps = -1;
    tg_structure* model = nullptr;
    char* stats_raw = nullptr;
    int rc;
    if (rep["GFU+TG"]["member"].get<bool>() && !rep["GFU"]["member"].get<bool>()) {
      rc = tg_finsat(in.f, in.sig, R"({"logic":"gfutg"})", &model, &stats_raw);
    } else if (rep["GF+TG"]["member"].get<bool>() && !rep["GF"]["member"].get<bool>()) {
      rc = tg_finsat(in.f, in.sig, R"({"logic":"gftg"})", &model, &stats_raw);
    } else if (rep["GFU"]["member"].get<bool>()) {
      rc = tg_saturate(in.f, in.sig, R"({"max_seed_size":4})", &model, &stats_raw);
    } else {
      rc = tg_find(in.f, in.sig, R"({"max_size":4})", &model);
    }
    if (rc == TG_OK) {
      verdict = "sat";
      if (model) model_size = tg_structure_size(model);
    } else if (rc == TG_ABSENT) {
      verdict = "unsat-in-budget";
    }
    if (stats_raw) {
      auto stats = nlohmann::json::parse(take_string(stats_raw));
      if (stats.contains("steps")) steps = stats["steps"].get<long long>();
    }
    if (model) tg_structure_free(model);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - started)
                  .count();
    csv << path.filename().string() << "," << verdict << "," << model_size << "," << steps << ","
        << ms << "\n";
  }
  if (out_csv.empty())
    std::cout << csv.str();
  else
    write_atomic(out_csv, csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"triguard: finite-model toolkit for guarded logics with transitive guards"};
  app.require_subcommand(1);

  std::string file, model_path, out_path, trace_path, out_dir, logic = "gftg", csv_path;
  bool ubiquitous = false, transitive = false, ramified = false, tg = false, check_steps = false;
  int max_size = 3, max_seed = 4, max_fact_elems = 0, limit = 0;
  int alpha_max = 6, beta_max = 12, find_max = 5;

  auto* parse = app.add_subcommand("parse", "parse a formula file and print it canonically");
  parse->add_option("file", file, "formula file (or - for stdin)")->required();

  auto* classify = app.add_subcommand("classify", "report fragment membership");
  classify->add_option("file", file)->required();

  auto* normalize = app.add_subcommand("normalize", "emit normal-form disjuncts");
  normalize->add_option("file", file)->required();
  normalize->add_flag("--tg", tg, "apply the enhanced transitive-guard shape");
  normalize->add_option("--out-dir", out_dir, "write numbered formula files here");
  normalize->add_option("--limit", limit, "stop after this many disjuncts");

  auto* check = app.add_subcommand("check", "check a model against a normal-form sentence");
  check->add_option("model", model_path)->required();
  check->add_option("formula", file)->required();
  check->add_flag("--ubiquitous", ubiquitous);
  check->add_flag("--transitive", transitive);

  auto* find = app.add_subcommand("find", "bounded model search");
  find->add_option("formula", file)->required();
  find->add_option("--max-size", max_size);
  find->add_flag("--ubiquitous", ubiquitous);
  find->add_flag("--transitive", transitive);
  find->add_flag("--ramified", ramified);
  find->add_option("--max-fact-elems", max_fact_elems);
  find->add_option("--out", out_path);

  auto* saturate = app.add_subcommand("saturate", "run the U-saturation pipeline");
  saturate->add_option("--phi", file)->required();
  saturate->add_option("--max-seed-size", max_seed);
  saturate->add_flag("--tg", tg);
  saturate->add_flag("--check-steps", check_steps);
  saturate->add_option("--out", out_path);
  saturate->add_option("--trace", trace_path);

  auto* finsat = app.add_subcommand("finsat", "finite satisfiability within budgets");
  finsat->add_option("formula", file)->required();
  finsat->add_option("--logic", logic)->check(CLI::IsMember({"gftg", "gfutg"}));
  finsat->add_option("--alpha-max", alpha_max);
  finsat->add_option("--beta-max", beta_max);
  finsat->add_option("--find-max", find_max);
  finsat->add_option("--certificate", out_path);

  auto* corpus = app.add_subcommand("corpus", "batch-run a directory of .gf files");
  corpus->add_option("dir", file)->required();
  corpus->add_option("--out", csv_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (parse->parsed()) return cmd_parse(file);
  if (classify->parsed()) return cmd_classify(file);
  if (normalize->parsed()) return cmd_normalize(file, tg, out_dir, limit);
  if (check->parsed()) return cmd_check(model_path, file, ubiquitous, transitive);
  if (find->parsed())
    return cmd_find(file, max_size, ubiquitous, transitive, ramified, max_fact_elems, out_path);
  if (saturate->parsed()) return cmd_saturate(file, max_seed, tg, check_steps, out_path, trace_path);
  if (finsat->parsed()) return cmd_finsat(file, logic, alpha_max, beta_max, find_max, out_path);
  if (corpus->parsed()) return cmd_corpus(file, csv_path);
  return 2;
}
