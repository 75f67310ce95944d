#pragma once

#include "layertopic/corpus.hpp"
#include "layertopic/ctfidf.hpp"
#include "layertopic/embed_corpus.hpp"
#include "layertopic/embedding.hpp"
#include "layertopic/error.hpp"
#include "layertopic/experiment.hpp"
#include "layertopic/hdbscan.hpp"
#include "layertopic/hsd.hpp"
#include "layertopic/metrics.hpp"
#include "layertopic/model_io.hpp"
#include "layertopic/plot_data.hpp"
#include "layertopic/records.hpp"
#include "layertopic/reducer.hpp"
#include "layertopic/report.hpp"
#include "layertopic/synthetic.hpp"
#include "layertopic/topic_model.hpp"
