#pragma once
// Umbrella header.

#include "kgpop/baselines.hpp"
#include "kgpop/config.hpp"
#include "kgpop/dataset.hpp"
#include "kgpop/eval.hpp"
#include "kgpop/features.hpp"
#include "kgpop/influence.hpp"
#include "kgpop/io.hpp"
#include "kgpop/pipeline.hpp"
#include "kgpop/pseudo.hpp"
#include "kgpop/relations.hpp"
#include "kgpop/rng.hpp"
#include "kgpop/ssl.hpp"
#include "kgpop/student.hpp"
#include "kgpop/synthetic.hpp"
#include "kgpop/teacher.hpp"
#include "kgpop/triple.hpp"
