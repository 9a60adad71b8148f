// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Convenience header pulling in the whole library.

#pragma once

#include "drnnsep/common.hpp"
#include "drnnsep/eval/bss_eval.hpp"
#include "drnnsep/harness/config.hpp"
#include "drnnsep/harness/corpus.hpp"
#include "drnnsep/harness/pipeline.hpp"
#include "drnnsep/harness/sweep.hpp"
#include "drnnsep/harness/synthetic.hpp"
#include "drnnsep/io/container.hpp"
#include "drnnsep/io/csv.hpp"
#include "drnnsep/model/drnn.hpp"
#include "drnnsep/model/forward.hpp"
#include "drnnsep/model/serialize.hpp"
#include "drnnsep/nmf/basis_io.hpp"
#include "drnnsep/nmf/nmf.hpp"
#include "drnnsep/signal/audio.hpp"
#include "drnnsep/signal/features.hpp"
#include "drnnsep/signal/fft.hpp"
#include "drnnsep/signal/mixing.hpp"
#include "drnnsep/signal/stft.hpp"
#include "drnnsep/training/backprop.hpp"
#include "drnnsep/training/lbfgs.hpp"
#include "drnnsep/training/loss.hpp"
#include "drnnsep/training/sequences.hpp"
#include "drnnsep/training/trainer.hpp"
