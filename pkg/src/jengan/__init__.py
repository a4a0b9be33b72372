"""Anti-aliasing training strategy for 1-D generative audio networks.

Blocks are wrapped, during training only, between a pair of shifted sinc
low-pass filters whose shifts cancel in continuous time; sampling the
shift anew each step pushes the blocks toward shift-equivariance, which
suppresses aliasing from up/downsampling layers and nonlinearities.  The
package also ships a small reverse-mode autodiff core, a toy GAN vocoder
to train with and without the strategy, and the measurements (aliasing
energy, equivariance error, mel MAE, multi-resolution STFT distance) that
show the difference.
"""

from .delta_sampling import (DeltaRng, DeltaSample, DeltaSchedule,
                             SamplingMethod, sample_delta, sample_schedule,
                             zero_schedule)
from .metrics import (AliasReport, EquivarianceReport, MelConfig, StftConfig,
                      alias_energy, equivariance_error, mel_mae,
                      mel_spectrogram, mstft, stft_magnitude)
from .sinc_filters import (InvalidShiftError, Signal, SincKernel,
                           apply_filter, fractional_delay, frequency_response,
                           make_sinc_kernel)
from .signal_io import SynthSpec, WavFormatError, read_wav, synthesize, write_wav
from .vocoder import (TrainConfig, Trainer, TrainingDivergedError,
                      build_toy_discriminator, build_toy_generator, inference,
                      load_generator, run_training)
from .wrapping import (InvalidRatioError, ShiftAssignment, WrappableBlock,
                       assign_shift, discriminator_pair_forward,
                       generator_forward_jengan, wrap_block)

__version__ = "0.1.0"
