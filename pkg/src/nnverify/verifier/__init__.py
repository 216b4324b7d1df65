"""Decision procedures for the verification problems."""

from .decide import (Certificate, Verdict, check_certificate, decide, decide_acr, decide_cr, decide_glr,
                     decide_gsr, decide_lr, decide_ne, decide_nnr, decide_sr, decide_vip, violates)
from .problems import (ACR, CR, GLR, GSR, LR, NE, NNR, SR, VIP, PROBLEMS, dump_instance, instance_from_dict,
                       instance_to_dict, load_instance)
from .sampling import sample_falsify
