#pragma once

#include "pgrag/communities.hpp"
#include "pgrag/concept_extract.hpp"
#include "pgrag/context_engine.hpp"
#include "pgrag/error.hpp"
#include "pgrag/eval_harness.hpp"
#include "pgrag/graph_store.hpp"
#include "pgrag/llm_gateway.hpp"
#include "pgrag/prompt_builder.hpp"
#include "pgrag/text.hpp"
#include "pgrag/tfidf_index.hpp"
