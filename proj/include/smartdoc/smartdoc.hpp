#ifndef SMARTDOC_SMARTDOC_HPP
#define SMARTDOC_SMARTDOC_HPP

#include "api.hpp"
#include "codec.hpp"
#include "engine.hpp"
#include "kb_model.hpp"
#include "kb_parser.hpp"
#include "matcher.hpp"
#include "scheduler.hpp"
#include "simulate.hpp"
#include "store.hpp"
#include "text.hpp"
#include "timestamp.hpp"

#endif // SMARTDOC_SMARTDOC_HPP
