// Reference adapter: predicts the majority training class for every test
// sample. Exists to exercise the adapter protocol end to end and as a
// starting point for real integrations.

#include <algorithm>
#include <iostream>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "emobench/container.hpp"
#include "emobench/metrics.hpp"

using nlohmann::json;

namespace {

std::vector<int> read_labels(const std::string& path) {
  const emobench::MatrixF m = emobench::read_container(path);
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.cols(); ++i) {
    labels.push_back(static_cast<int>(m(0, i)));
  }
  return labels;
}

void reply(const json& msg) {
  std::cout << msg.dump() << "\n";
  std::cout.flush();
}

}  // namespace

int main() {
  int n_classes = 0;
  int majority = 0;
  std::vector<int> train_labels;

  std::string line;
  while (std::getline(std::cin, line)) {
    json msg;
    try {
      msg = json::parse(line);
    } catch (const json::exception&) {
      std::cerr << "majority_adapter: unparseable message\n";
      return 1;
    }
    const std::string type = msg.value("type", "");

    if (type == "init") {
      n_classes = msg.at("n_classes").get<int>();
      reply({{"type", "ack"}, {"protocol", msg.at("protocol")}});
    } else if (type == "fit") {
      train_labels = read_labels(msg.at("train_labels").get<std::string>());
      std::map<int, int> counts;
      for (int y : train_labels) counts[y] += 1;
      majority = 0;
      int best = -1;
      for (const auto& [label, count] : counts) {
        if (count > best) {
          best = count;
          majority = label;
        }
      }
      // One "epoch": validation metrics of the constant prediction.
      const std::vector<int> val_labels = read_labels(msg.at("val_labels").get<std::string>());
      if (!val_labels.empty()) {
        const std::vector<int> val_pred(val_labels.size(), majority);
        const emobench::ConfusionResult r =
            emobench::confusion_metrics(val_pred, val_labels, n_classes);
        reply({{"type", "epoch"},
               {"epoch", 0},
               {"val_accuracy", r.metrics.accuracy},
               {"val_f1", r.metrics.macro_f1}});
      }
      reply({{"type", "fitted"}});
    } else if (type == "predict") {
      const emobench::MatrixF features =
          emobench::read_container(msg.at("features").get<std::string>());
      reply({{"type", "predictions"},
             {"labels", std::vector<int>(static_cast<std::size_t>(features.cols()), majority)}});
    } else if (type == "shutdown") {
      return 0;
    } else {
      std::cerr << "majority_adapter: unexpected message type '" << type << "'\n";
      return 1;
    }
  }
  return 0;
}
