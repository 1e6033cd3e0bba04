// Copyright 2026 The tonetier Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python bindings for tonetier.

#include <filesystem>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "text_util.hpp"
#include "tonetier/ctc.hpp"
#include "tonetier/error.hpp"
#include "tonetier/features.hpp"
#include "tonetier/pipeline.hpp"

namespace py = pybind11;
using namespace tonetier;

namespace {

using TierDict = std::map<std::string, std::vector<std::string>>;

TierHypotheses to_tiers(const TierDict& d) {
  TierHypotheses out;
  for (const auto& [k, v] : d) out[parse_tier_id(k)] = v;
  return out;
}

TierDict from_tiers(const TierHypotheses& t) {
  TierDict out;
  for (const auto& [k, v] : t) out[std::string(to_string(k))] = v;
  return out;
}

SyllabifiedTranscript tokenize(const std::string& ipa, const std::string& lang) {
  return lang.empty() ? tokenize_ipa(ipa) : tokenize_ipa(ipa, language_inventory(lang));
}

std::string resolution_name(const SymbolMapping& m) {
  std::string r(to_string(m.resolution));
  if (m.resolution == Resolution::joint_two_stage) {
    r += m.phone_stage == MatchKind::exact       ? ":exact"
         : m.phone_stage == MatchKind::diacritic ? ":diacritic"
                                                 : ":feature-nearest";
  }
  return r;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-tier CTC modeling of phones and tones";

  // Lives as long as the module; intentionally never released.
  static PyObject* error_type =
      py::exception<Error>(m, "TonetierError", PyExc_RuntimeError).release().ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error_type)(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type, exc.ptr());
    }
  });

  m.def(
      "tokenize",
      [](const std::string& ipa, const std::string& lang) {
        std::vector<std::vector<std::string>> out;
        for (const Syllable& syl : tokenize(ipa, lang)) {
          std::vector<std::string> s;
          for (const IpaSymbol& sym : syl) s.push_back(sym.render());
          out.push_back(std::move(s));
        }
        return out;
      },
      py::arg("ipa"), py::arg("lang") = "", "Syllables of rendered IPA symbols.");

  m.def(
      "tiers",
      [](const std::string& ipa, const std::string& lang, int variant) {
        TierDict out;
        for (const auto& [tier, t] : build_tiers(tokenize(ipa, lang), lang, ModelVariant(variant))) {
          out[std::string(to_string(tier))] = t.symbols;
        }
        return out;
      },
      py::arg("ipa"), py::arg("lang"), py::arg("variant") = 1, "Label sequences of every tier of a model variant.");

  m.def(
      "ctc_loss",
      [](const Matrix& logits, const LabelSequence& ref) {
        CtcResult r = ctc_loss(logits, ref);
        return py::make_tuple(r.loss, r.gradient);
      },
      py::arg("logits"), py::arg("ref"), "Negative log-likelihood and its gradient w.r.t. the logits.");
  m.def(
      "brute_force_ctc", [](const Matrix& logits, const LabelSequence& ref) { return brute_force_ctc(logits, ref); },
      py::arg("logits"), py::arg("ref"));
  m.def(
      "greedy_decode", [](const Matrix& logits) { return greedy_decode(logits); }, py::arg("logits"));
  m.def(
      "beam_decode",
      [](const Matrix& logits, int beam_width) { return beam_decode(logits, BeamOptions{beam_width, 0.0, nullptr}); },
      py::arg("logits"), py::arg("beam_width") = 25);

  m.def(
      "log_mel",
      [](const std::vector<double>& samples, int sample_rate) { return log_mel(samples, sample_rate); },
      py::arg("samples"), py::arg("sample_rate"), "T x 40 log-Mel filterbank energies.");
  m.def(
      "extract_f0",
      [](const std::vector<double>& samples, int sample_rate) { return extract_f0(samples, sample_rate); },
      py::arg("samples"), py::arg("sample_rate"), "Per-frame F0 in Hz; 0 for unvoiced frames.");
  m.def("hz_to_mel", &hz_to_mel, py::arg("hz"));

  py::class_<EditCounts>(m, "EditCounts")
      .def_readonly("substitutions", &EditCounts::substitutions)
      .def_readonly("deletions", &EditCounts::deletions)
      .def_readonly("insertions", &EditCounts::insertions)
      .def_readonly("ref_length", &EditCounts::ref_length)
      .def_property_readonly("rate", &EditCounts::rate)
      .def("__repr__", [](const EditCounts& c) {
        return "EditCounts(S=" + std::to_string(c.substitutions) + ", D=" + std::to_string(c.deletions) +
               ", I=" + std::to_string(c.insertions) + ", N=" + std::to_string(c.ref_length) + ")";
      });
  m.def(
      "edit_distance",
      [](const std::vector<std::string>& ref, const std::vector<std::string>& hyp) { return edit_distance(ref, hyp); },
      py::arg("ref"), py::arg("hyp"));
  m.def(
      "phones_from_joint", [](const std::vector<std::string>& joint) { return phones_from_joint(joint); },
      py::arg("joint"));
  m.def(
      "tones_from_joint", [](const std::vector<std::string>& joint) { return tones_from_joint(joint); },
      py::arg("joint"));
  m.def("report_metrics", [](int variant) { return report_metrics(ModelVariant(variant)); }, py::arg("variant"));
  m.def(
      "score",
      [](const std::vector<std::tuple<std::string, std::string, TierDict, TierDict>>& utterances, int variant) {
        std::vector<ScoredUtterance> scored;
        for (const auto& [id, lang, ref, hyp] : utterances) scored.push_back({id, lang, to_tiers(ref), to_tiers(hyp)});
        return report_csv(build_report(scored, ModelVariant(variant)));
      },
      py::arg("utterances"), py::arg("variant"),
      "Report CSV for (utt_id, lang, reference tiers, hypothesis tiers) tuples.");

  m.def(
      "resolve_symbol",
      [](const std::string& k, const std::string& tier, const std::map<std::string, std::vector<std::string>>& training) {
        const TierId t = parse_tier_id(tier);
        std::vector<TierAlphabet> alphabets;
        for (const auto& [lang, syms] : training) alphabets.emplace_back(t, lang, syms);
        const SymbolMapping r = resolve_symbol(k, t, alphabets);
        py::dict d;
        d["target"] = r.target;
        d["resolution"] = resolution_name(r);
        d["source"] = r.source;
        d["contributors"] = r.contributors;
        return d;
      },
      py::arg("symbol"), py::arg("tier"), py::arg("training"),
      "Maps a symbol onto the training languages' alphabets for head initialization.");

  m.def(
      "synth_corpus",
      [](const std::string& out_dir, std::uint64_t seed, const std::string& spec_json) {
        SynthCorpusSpec spec = spec_json.empty() ? SynthCorpusSpec::defaults(seed) : SynthCorpusSpec::parse(spec_json);
        spec.seed = seed;
        return write_synth_corpus(spec, out_dir).records.size();
      },
      py::arg("out_dir"), py::arg("seed"), py::arg("spec_json") = "",
      "Writes a synthetic corpus (features and manifest.jsonl); returns the utterance count.");

  m.def(
      "run_experiment",
      [](const std::string& manifest_path, const std::string& plan_text, const std::string& out_dir) {
        const ExperimentPlan plan = ExperimentPlan::parse(plan_text);
        const Manifest manifest = Manifest::read(manifest_path);
        std::string base = std::filesystem::path(manifest_path).parent_path().string();
        if (base.empty()) base = ".";
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(Dataset::load(manifest, base, plan.with_f0), plan);
        }
        if (!out_dir.empty()) write_experiment(r, out_dir);
        py::dict d;
        d["report_csv"] = report_csv(r.report);
        d["report"] = report_table(r.report);
        d["audit"] = format_audit(r.audit);
        d["hypotheses"] = format_hypotheses(r.scored);
        return d;
      },
      py::arg("manifest"), py::arg("plan") = "", py::arg("out_dir") = "",
      "Runs an experiment plan (key=value text) on a manifest.");
}
