#pragma once

#include <stdexcept>
#include <string>

namespace chromaq {

/// Base class for all chromaq errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// signal
struct NoPeakFound : Error { using Error::Error; };
struct InsufficientIdleSamples : Error { using Error::Error; };
struct ZeroNoise : Error { using Error::Error; };
struct LevelNotBracketed : Error { using Error::Error; };

// tabular
struct SchemaMismatch : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct ZeroVarianceFeature : Error { using Error::Error; };
struct DegenerateRange : Error { using Error::Error; };
struct MissingFeature : Error { using Error::Error; };

// reduce / cluster / models
struct DimensionMismatch : Error { using Error::Error; };
struct TooFewSamples : Error { using Error::Error; };
struct SingleCluster : Error { using Error::Error; };
struct ZeroVarianceTarget : Error { using Error::Error; };
struct AllCombinationsFailed : Error { using Error::Error; };

// pipeline
struct ConfigError : Error { using Error::Error; };
struct PipelineStageError : Error { using Error::Error; };
struct InsufficientClusterData : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

} // namespace chromaq
