// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Writes the synthetic speech/noise corpus: make_demo_corpus <dir> [seed]

#include <cstdlib>
#include <iostream>

#include "maskgru/demo_corpus.hpp"
#include "maskgru/error.hpp"

int main(int argc, char** argv) {
  if (argc < 2 || argc > 3) {
    std::cerr << "usage: make_demo_corpus <dir> [seed]\n";
    return 2;
  }
  maskgru::DemoCorpusSpec spec;
  if (argc == 3) spec.seed = std::strtoull(argv[2], nullptr, 10);
  try {
    const auto c = maskgru::GenerateDemoCorpus(argv[1], spec);
    std::cout << c.speech.size() << " speech files (" << spec.speech_minutes() << " min), "
              << c.noise.size() << " noise files in " << argv[1] << "\n";
  } catch (const maskgru::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
