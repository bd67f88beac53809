#include "gvps/curves.hpp"

#include <cstdio>
#include <fstream>
#include <string>

#include "gvps/error.hpp"
#include "gvps/trainer.hpp"

namespace gvps {

namespace {

void put(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << ',' << buf;
}

}  // namespace

std::size_t export_curves(std::istream& metrics_jsonl, std::ostream& csv) {
  csv << "step,train_accuracy,mean_reward,mean_response_len,grad_norm,mean_entropy,mean_abs_delta_c,probe_forwards\n";
  std::size_t rows = 0;
  std::string line;
  while (std::getline(metrics_jsonl, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const TrainMetrics m = metrics_from_json_line(line);
    csv << m.step;
    put(csv, m.train_accuracy);
    put(csv, m.mean_reward);
    put(csv, m.mean_response_len);
    put(csv, m.grad_norm);
    put(csv, m.mean_entropy);
    put(csv, m.mean_abs_delta_c);
    csv << ',' << m.probe_forwards << '\n';
    ++rows;
  }
  return rows;
}

std::size_t export_curves(const std::filesystem::path& metrics_jsonl, const std::filesystem::path& csv) {
  std::ifstream in(metrics_jsonl);
  if (!in) throw InputError("harness", "cannot read metrics " + metrics_jsonl.string());
  std::ofstream out(csv, std::ios::trunc);
  if (!out) throw InputError("harness", "cannot write " + csv.string());
  return export_curves(in, out);
}

}  // namespace gvps
