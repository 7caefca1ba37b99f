#pragma once

#include "delicate/corpus.hpp"
#include "delicate/error.hpp"
#include "delicate/eval.hpp"
#include "delicate/features.hpp"
#include "delicate/gbt.hpp"
#include "delicate/index.hpp"
#include "delicate/kb.hpp"
#include "delicate/linker.hpp"
#include "delicate/pipeline.hpp"
#include "delicate/presets.hpp"
#include "delicate/types.hpp"
