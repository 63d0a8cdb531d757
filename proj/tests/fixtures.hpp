#pragma once
// Hand-built datasets shared by the unit and acceptance suites.

#include <string>
#include <vector>

#include "auditod/tuning.hpp"
#include "test_util.hpp"

namespace auditod::testing {

struct LabeledFrame {
  FeatureFrame frame;
  LabelSet labels;
};

// A dense 1-D cluster, one point 0.3 beyond its edge (the planted outlier),
// and three far-away tight pairs. With k = 1 the planted point has the largest
// neighbor distance; for any k >= 2 the pair members dominate because their
// second neighbor is at least 10 away.
inline LabeledFrame knn_single_k_fixture() {
  std::vector<double> xs;
  for (int i = 0; i < 60; ++i) xs.push_back(i * 0.01);
  xs.push_back(0.59 + 0.3);
  for (double c : {10.0, 20.0, 30.0}) {
    xs.push_back(c);
    xs.push_back(c + 0.001);
  }
  auto frame = frame_from_column(xs);
  LabelSet labels;
  labels.positives.insert(frame.ids()[60]);
  return {std::move(frame), std::move(labels)};
}

}  // namespace auditod::testing
