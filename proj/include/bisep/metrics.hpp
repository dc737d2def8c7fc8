// include/bisep/metrics.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef BISEP_METRICS_HPP_
#define BISEP_METRICS_HPP_

#include <string>
#include <vector>

#include "bisep/ace.hpp"
#include "bisep/curriculum.hpp"
#include "bisep/model.hpp"

namespace bisep::metrics {

// SIR improvement in dB. `undefined` marks the degenerate case where the
// mixture already equals the target (zero numerator); `capped` marks results
// clamped by the denominator floor (1e-12) or the 120 dB ceiling.
struct SiriResult {
  double value_db = 0.0;
  bool capped = false;
  bool undefined = false;
};

// 10*log10( sum ||p_mix - p_tar||^2 / sum ||p_hat - p_tar||^2 ).
SiriResult siri(const ace::Electrodogram& p_mix,
                const ace::Electrodogram& p_tar,
                const ace::Electrodogram& p_hat);

// Per-electrode Pearson correlation between prediction and target rows.
// Rows with zero variance on either side are undefined and excluded from
// aggregates.
struct LccValue {
  double value = 0.0;
  bool defined = false;
};

std::vector<LccValue> lcc_per_electrode(const ace::Electrodogram& p_hat,
                                        const ace::Electrodogram& p_tar);

// One evaluation row: utterance x condition x model cell.
struct EvalRecord {
  std::string utt_id;
  model::Variant variant = model::Variant::brain_informed;
  curriculum::Kind curriculum = curriculum::Kind::none;
  double input_sir_db = 0.0;
  double rho = 1.0;           // nominal cue reliability (1.0 = oracle cue)
  double rho_measured = 1.0;  // empirical correlation of the degraded cue
  SiriResult siri;
  std::vector<LccValue> lcc;
};

enum class GroupBy { input_sir, rho, electrode };

struct AggregateRow {
  double group = 0.0;  // SIR in dB, rho, or 1-based electrode index
  double mean = 0.0;
  double standard_error = 0.0;
  int count = 0;
};

// Mean and standard error (sample sd / sqrt(n); 0 when n = 1) of SIRi per
// input-SIR or rho group, or of defined LCCs per electrode. Rows are ordered
// by ascending group key. Undefined metric values are excluded.
std::vector<AggregateRow> aggregate(const std::vector<EvalRecord>& records,
                                    GroupBy group_by);

// Results CSV: header
//   utt_id,variant,curriculum,input_sir_db,rho,siri_db,capped,
//   lcc_e1..lcc_eM,rho_measured
// with undefined LCCs as empty fields and an undefined SIRi as an empty
// siri_db field. Write/read round-trips all fields.
void write_results_csv(const std::string& path,
                       const std::vector<EvalRecord>& records,
                       int num_electrodes);

std::vector<EvalRecord> read_results_csv(const std::string& path);

}  // namespace bisep::metrics

#endif  // BISEP_METRICS_HPP_
