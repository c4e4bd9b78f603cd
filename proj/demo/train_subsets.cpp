// Trains the randomized CRF learner on one synthetic subset-selection task
// and prints its test losses next to the exact learner's.
#include <iostream>

#include "pmap/pmap.hpp"

int main() {
  using namespace pmap;
  const auto family = StructureFamily::subset(4, 15);
  const auto seeds = repetition_seeds(7, 0, family);
  const auto w_star = generate_ground_truth(family, seeds.ground_truth);
  const auto train_set = generate_dataset(family, w_star, 100, seeds.train_x);
  const auto test_set = generate_dataset(family, w_star, 100, seeds.test_x);

  ProposalConfig proposal;
  proposal.n_target = default_n_target(train_set.size());
  for (Method method : {Method::CrfAll, Method::CrfRand}) {
    TrainConfig cfg;
    cfg.method = method;
    cfg.seed = seeds.proposal;
    const auto res = train(train_set, cfg, proposal);
    std::cout << to_string(method) << ": test CRF loss "
              << exact_crf_loss(res.w, test_set, res.beta).value << ", test Hamming "
              << hamming_loss(res.w, test_set).value << ", " << res.seconds << " s\n";
  }
}
