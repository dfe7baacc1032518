#pragma once

#include "skelscene/errors.hpp"
#include "skelscene/util.hpp"
#include "skelscene/skeleton.hpp"
#include "skelscene/kinematics.hpp"
#include "skelscene/partition.hpp"
#include "skelscene/descriptor.hpp"
#include "skelscene/ingest.hpp"
#include "skelscene/augment.hpp"
#include "skelscene/classifier.hpp"
#include "skelscene/config.hpp"
#include "skelscene/pipeline.hpp"
