#include "triguard/triguard.h"

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "core/fragments.hpp"
#include "core/finder.hpp"
#include "core/modelcheck.hpp"
#include "core/normalform.hpp"
#include "core/parser.hpp"
#include "core/saturation.hpp"
#include "core/structure.hpp"
#include "core/tgconstruct.hpp"
#include "json.hpp"

using namespace triguard;

struct tg_signature {
  SigPtr sig;
};
struct tg_formula {
  Formula f;
};
struct tg_structure {
  Structure s;
};
struct tg_nf_iter {
  NormalFormEnumerator en;
  bool enhance;
};

namespace {

thread_local std::string g_last_error;

int code_of(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Syntax: return TG_ERR_SYNTAX;
    case ErrorKind::Signature: return TG_ERR_SIGNATURE;
    case ErrorKind::Arity: return TG_ERR_ARITY;
    case ErrorKind::Fragment: return TG_ERR_FRAGMENT;
    case ErrorKind::Shape: return TG_ERR_SHAPE;
    case ErrorKind::Domain: return TG_ERR_DOMAIN;
    case ErrorKind::Construction: return TG_ERR_CONSTRUCTION;
    case ErrorKind::Io: return TG_ERR_IO;
  }
  return TG_ERR_OTHER;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    g_last_error = e.what();
    return code_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TG_ERR_OTHER;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

SearchConfig config_from_json(const char* json) {
  SearchConfig cfg;
  if (!json || !*json) return cfg;
  auto j = nlohmann::json::parse(json);
  if (j.contains("max_size")) cfg.max_domain_size = j["max_size"].get<int>();
  if (j.contains("ubiquitous")) cfg.ubiquitous = j["ubiquitous"].get<bool>();
  if (j.contains("transitive")) cfg.transitive = j["transitive"].get<bool>();
  if (j.contains("ramified")) cfg.ramified = j["ramified"].get<bool>();
  if (j.contains("max_fact_elems"))
    cfg.max_distinct_elements_per_fact = j["max_fact_elems"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  return cfg;
}

// A sentence handed to check/find must be in shape (1) already or be
// recognizable as such.
NormalFormSentence require_normal_form(const Formula& f, SigPtr sig) {
  auto nf = recognize_normal_form(f, sig);
  if (!nf)
    fail(ErrorKind::Shape,
         "sentence is not in normal form; run `triguard normalize` first");
  return *nf;
}

}  // namespace

extern "C" {

const char* tg_version(void) { return "0.1.0"; }

const char* tg_last_error(void) { return g_last_error.c_str(); }

void tg_string_free(char* s) { std::free(s); }

int tg_signature_parse(const char* text, tg_signature** out) {
  return guarded([&] {
    auto [sig, off] = parse_signature_header(text ? text : "");
    std::string rest(text + off);
    if (rest.find_first_not_of(" \t\r\n") != std::string::npos)
      fail(ErrorKind::Syntax, "trailing input after the signature header");
    *out = new tg_signature{std::make_shared<Signature>(std::move(sig))};
    return TG_OK;
  });
}

int tg_signature_format(const tg_signature* sig, char** out) {
  return guarded([&] {
    *out = dup_string(sig->sig->format());
    return TG_OK;
  });
}

void tg_signature_free(tg_signature* sig) { delete sig; }

int tg_formula_parse(const tg_signature* sig, const char* text, tg_formula** out) {
  return guarded([&] {
    *out = new tg_formula{parse_formula(text ? text : "", *sig->sig)};
    return TG_OK;
  });
}

int tg_formula_load(const char* file_text, tg_signature** sig_out, tg_formula** out) {
  return guarded([&] {
    auto [sig, f] = parse_formula_file(file_text ? file_text : "");
    *sig_out = new tg_signature{std::make_shared<Signature>(std::move(sig))};
    *out = new tg_formula{std::move(f)};
    return TG_OK;
  });
}

int tg_formula_print(const tg_formula* f, char** out) {
  return guarded([&] {
    *out = dup_string(f->f.print());
    return TG_OK;
  });
}

int tg_classify(const tg_formula* f, const tg_signature* sig, char** json_out) {
  return guarded([&] {
    *json_out = dup_string(classify_fragment(f->f, *sig->sig).to_json());
    return TG_OK;
  });
}

int tg_tgf_to_gfu(const tg_formula* f, const tg_signature* sig, tg_formula** out) {
  return guarded([&] {
    *out = new tg_formula{tgf_to_gfu(f->f, *sig->sig)};
    return TG_OK;
  });
}

int tg_gfu_to_tgf(const tg_formula* f, const tg_signature* sig, tg_formula** out) {
  return guarded([&] {
    *out = new tg_formula{gfu_to_tgf(f->f, *sig->sig)};
    return TG_OK;
  });
}

void tg_formula_free(tg_formula* f) { delete f; }

int tg_normalize_begin(const tg_formula* f, const tg_signature* sig, int tg_enhance,
                       tg_nf_iter** out) {
  return guarded([&] {
    *out = new tg_nf_iter{to_normal_form(f->f, sig->sig), tg_enhance != 0};
    return TG_OK;
  });
}

int tg_normalize_next(tg_nf_iter* it, char** file_text_out) {
  return guarded([&]() -> int {
    auto nf = it->en.next();
    if (!nf) return TG_ABSENT;
    NormalFormSentence out = it->enhance ? enhance_tg_normal_form(*nf) : std::move(*nf);
    *file_text_out = dup_string(format_formula_file(*out.sig, out.to_formula()));
    return TG_OK;
  });
}

void tg_nf_iter_free(tg_nf_iter* it) { delete it; }

int tg_structure_parse(const tg_signature* sig, const char* jsonl, tg_structure** out) {
  return guarded([&] {
    *out = new tg_structure{Structure::from_jsonl(sig->sig, jsonl ? jsonl : "")};
    return TG_OK;
  });
}

int tg_structure_format(const tg_structure* s, char** jsonl_out) {
  return guarded([&] {
    *jsonl_out = dup_string(s->s.to_jsonl());
    return TG_OK;
  });
}

int tg_structure_size(const tg_structure* s) { return s->s.size(); }

void tg_structure_free(tg_structure* s) { delete s; }

int tg_evaluate(const tg_structure* s, const tg_formula* f, int* verdict) {
  return guarded([&] {
    if (!f->f.is_sentence()) fail(ErrorKind::Domain, "tg_evaluate needs a sentence");
    *verdict = evaluate(s->s, f->f, {}) ? 1 : 0;
    return TG_OK;
  });
}

int tg_check(const tg_structure* s, const tg_formula* f, const tg_signature* sig, int flags,
             int* verdict, char** report_json_out) {
  return guarded([&] {
    NormalFormSentence nf = require_normal_form(f->f, sig->sig);
    CheckFlags cf;
    cf.ubiquitous = (flags & 1) != 0;
    cf.transitive = (flags & 2) != 0;
    CheckReport rep = check_model(s->s, nf, cf);
    *verdict = rep.verdict ? 1 : 0;
    if (report_json_out) *report_json_out = dup_string(rep.to_json());
    return TG_OK;
  });
}

int tg_find(const tg_formula* f, const tg_signature* sig, const char* config_json,
            tg_structure** out) {
  return guarded([&]() -> int {
    NormalFormSentence nf = require_normal_form(f->f, sig->sig);
    SearchConfig cfg = config_from_json(config_json);
    auto model = find_model(nf, cfg);
    if (!model) return TG_ABSENT;
    *out = new tg_structure{std::move(*model)};
    return TG_OK;
  });
}

int tg_saturate(const tg_formula* f, const tg_signature* sig, const char* options_json,
                tg_structure** model_out, char** stats_json_out) {
  return guarded([&]() -> int {
    nlohmann::json j =
        options_json && *options_json ? nlohmann::json::parse(options_json) : nlohmann::json::object();
    int max_seed = j.value("max_seed_size", 4);
    bool tg = j.value("tg", false);
    bool check_steps = j.value("check_steps", false);
    std::string trace_path = j.value("trace_path", std::string());

    NormalFormSentence nf = require_normal_form(f->f, sig->sig);
    // A bounded U-biquitous model provides the realized 1-types for phi*.
    SearchConfig cfg;
    cfg.max_domain_size = max_seed;
    cfg.ubiquitous = true;
    cfg.transitive = tg;
    auto witness = find_model(nf, cfg);
    if (!witness) return TG_ABSENT;
    auto alpha = realized_types(*witness).one_types;
    NormalFormSentence phi_star = build_phi_star(nf, alpha, tg);
    SearchConfig seed_cfg;
    seed_cfg.max_domain_size = max_seed;
    seed_cfg.transitive = tg;
    auto seed = find_model(phi_star, seed_cfg);
    if (!seed) return TG_ABSENT;

    SaturationOptions opts;
    opts.constants = sig->sig->constant_count() > 0;
    opts.tg_mode = tg;
    opts.check_every_step = check_steps;
    opts.record_added_facts = !trace_path.empty();
    SaturationResult res = saturate(*seed, phi_star, opts);

    if (!trace_path.empty()) {
      std::ofstream out(trace_path);
      if (!out) fail(ErrorKind::Io, "cannot write trace file " + trace_path);
      for (const auto& s : res.trace.steps) {
        out << "{\"pair\":[" << s.b1 << "," << s.b2 << "],\"cell1\":[" << s.k1 << "," << s.l1
            << "," << s.n1 << "],\"cell2\":[" << s.k2 << "," << s.l2 << "," << s.n2
            << "],\"t\":" << s.t << ",\"added\":[";
        for (size_t i = 0; i < s.added.size(); ++i) {
          if (i) out << ",";
          out << "{\"rel\":\"" << sig->sig->relation(s.added[i].first).name << "\",\"tuple\":[";
          for (int k = 0; k < s.added[i].second.size(); ++k) {
            if (k) out << ",";
            out << s.added[i].second[k];
          }
          out << "]}";
        }
        out << "]}\n";
      }
    }

    std::ostringstream stats;
    stats << "{\"seed_size\":" << seed->size() << ",\"a0_size\":" << res.a0_size
          << ",\"a0_facts\":" << res.a0_facts << ",\"K\":" << res.K << ",\"named\":" << res.named
          << ",\"steps\":" << res.trace.steps.size() << ",\"model_size\":" << res.model.size()
          << ",\"model_facts\":" << res.model.fact_count() << "}";
    if (stats_json_out) *stats_json_out = dup_string(stats.str());
    *model_out = new tg_structure{std::move(res.model)};
    return TG_OK;
  });
}

int tg_finsat(const tg_formula* f, const tg_signature* sig, const char* options_json,
              tg_structure** certificate_out, char** stats_json_out) {
  return guarded([&]() -> int {
    nlohmann::json j =
        options_json && *options_json ? nlohmann::json::parse(options_json) : nlohmann::json::object();
    std::string logic = j.value("logic", std::string("gftg"));
    TgBudgets budgets;
    budgets.alpha_max = j.value("alpha_max", budgets.alpha_max);
    budgets.beta_max = j.value("beta_max", budgets.beta_max);
    budgets.find_max = j.value("find_max", budgets.find_max);

    FinsatResult res;
    if (logic == "gftg")
      res = decide_finsat_gftg(f->f, sig->sig, budgets);
    else if (logic == "gfutg")
      res = decide_finsat_gfutg(f->f, sig->sig, budgets);
    else
      fail(ErrorKind::Domain, "logic must be gftg or gfutg");

    std::ostringstream stats;
    stats << "{\"sat\":" << (res.sat ? "true" : "false") << ",\"detail\":\"" << res.detail
          << "\"";
    if (res.sat && res.certificate) stats << ",\"certificate_size\":" << res.certificate->size();
    stats << "}";
    if (stats_json_out) *stats_json_out = dup_string(stats.str());
    if (!res.sat) return TG_ABSENT;
    if (certificate_out && res.certificate)
      *certificate_out = new tg_structure{std::move(*res.certificate)};
    return TG_OK;
  });
}

}  // extern "C"
