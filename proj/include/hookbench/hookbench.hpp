#pragma once

#include "hookbench/config.hpp"
#include "hookbench/error.hpp"
#include "hookbench/experiment.hpp"
#include "hookbench/http.hpp"
#include "hookbench/loadgen.hpp"
#include "hookbench/manifests.hpp"
#include "hookbench/net.hpp"
#include "hookbench/plots.hpp"
#include "hookbench/process.hpp"
#include "hookbench/report.hpp"
#include "hookbench/resources.hpp"
#include "hookbench/samples_csv.hpp"
#include "hookbench/stats.hpp"
#include "hookbench/sut.hpp"
