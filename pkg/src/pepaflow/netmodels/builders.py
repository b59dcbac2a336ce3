"""Model builders for the signalling-service architecture and the 3GPP baseline.

Both models follow one convention: every network function (NF) is a thread
pool cooperating with a processor pool, and every task that needs CPU is
preceded by an acquisition ``get_<proc>`` of that processor. Processors are
two-state (acquire, then perform exactly one task).
"""

from __future__ import annotations

from ..core.model import iter_groups
from ..parser import parse_model, serialize_model
from .config import ArchitectureConfig

# NF component -> (config key, processor component)
NFS = (
    ("Randp", "randp", "Randpp"),
    ("Rsf", "sf", "Rsfp"),
    ("Ran", "ran", "Ranp"),
    ("Cn", "cn", "Cnp"),
    ("Mbupf", "mbupf", "Mbupfp"),
    ("Bcc", "bcc", "Bccp"),
    ("Bsf", "bsf", "Bsfp"),
    ("Bdp", "bdp", "Bdpp"),
    ("Af", "af", "Afp"),
)
PROCESSORS = ("Uep",) + tuple(p for _, _, p in NFS)
COMPLETION_ACTION = "reconfig"

SSBA_NF_DEFS = """
Ue_1 = (get_uep, r_p).(mbsjoinreq, r_iat).Ue_2;
Ue_2 = (reconfig, r_v).Ue_1;

Randp_1 = (sessionrandp, r_v).Randp_2;
Randp_2 = (get_randpp, r_p).(prepare_randp, r_v).Randp_3;
Randp_3 = (reconfig, r_v).Randp_1;

Rsf_1 = (setupreq, r_v).Rsf_2;
Rsf_2 = (get_rsfp, r_p).(reconfig, r_v).Rsf_1;

Ran_1 = (sessioncreate, r_v).Ran_2;
Ran_2 = (get_ranp, r_p).(sessionrandp, r_v).(get_ranp, r_p).(sessionres, r_v).Ran_1;

Cn_1 = (mbsessioncom, r_v).Cn_2;
Cn_2 = (get_cnp, r_p).(sessioncreate, r_v).Cn_3;
Cn_3 = (sessionres, r_v).Cn_4;
Cn_4 = (get_cnp, r_p).(sessionupf, r_v).(get_cnp, r_p).(mbsessionres, r_v).Cn_1;

Mbupf_1 = (sessionupf, r_v).Mbupf_2;
Mbupf_2 = (get_mbupfp, r_p).(prepare_mbupf, r_v).Mbupf_1;

Bcc_1 = (tmgireq, r_v).Bcc_2;
Bcc_2 = (get_bccp, r_p).(tmgires, r_v).Bcc_3;
Bcc_3 = (sessionreq, r_v).Bcc_4;
Bcc_4 = (get_bccp, r_p).(mbsessioncom, r_v).(mbsessionres, r_v).Bcc_5;
Bcc_5 = (get_bccp, r_p).(sessioncontext, r_v).(get_bccp, r_p).(sessionbdp, r_v).(get_bccp, r_p).(sessionres_af, r_v).Bcc_1;

Bsf_1 = (sessioncontext, r_v).(mbsjoinreq, r_v).Bsf_2;
Bsf_2 = (get_bsfp, r_p).(setupreq, r_v).Bsf_1;

Bdp_1 = (sessionbdp, r_v).Bdp_2;
Bdp_2 = (get_bdpp, r_p).(prepare_bdp, r_v).Bdp_1;

Af_1 = (get_afp, r_p).(tmgireq, r_v).Af_2;
Af_2 = (tmgires, r_v).Af_3;
Af_3 = (get_afp, r_p).(sessionreq, r_v).Af_4;
Af_4 = (sessionres_af, r_v).Af_1;
"""

SSBA_PROC_WORK = {
    "Uep": ("get_uep", ["(mbsjoinreq, r_iat)"]),
    "Randpp": ("get_randpp", ["(prepare_randp, r_v)"]),
    "Rsfp": ("get_rsfp", ["(reconfig, r_v)"]),
    "Ranp": ("get_ranp", ["(sessionrandp, r_v)", "(sessionres, r_v)"]),
    "Cnp": ("get_cnp", ["(sessioncreate, r_v)", "(sessionupf, r_v)",
                        "(mbsessionres, r_v)"]),
    "Mbupfp": ("get_mbupfp", ["(prepare_mbupf, r_v)"]),
    "Bccp": ("get_bccp", ["(tmgires, r_v)", "(mbsessioncom, r_v)",
                          "(sessioncontext, r_v)", "(sessionres_af, r_v)",
                          "(sessionbdp, r_v)"]),
    "Bsfp": ("get_bsfp", ["(setupreq, r_v)"]),
    "Bdpp": ("get_bdpp", ["(prepare_bdp, r_v)"]),
    "Afp": ("get_afp", ["(tmgireq, r_v)", "(sessionreq, r_v)"]),
}

# cooperation sets along the NF chain, in system-equation order:
# Ue <0> Randp <1> Rsf <2> Ran <3> Cn <4> Mbupf <5> Bcc <6> Bsf <7> Bdp <8> Af
SSBA_COOP = (
    ("reconfig",),
    ("reconfig",),
    ("sessionrandp",),
    ("sessioncreate", "sessionres"),
    ("sessionupf",),
    ("mbsessioncom", "mbsessionres"),
    ("mbsjoinreq", "setupreq", "sessioncontext"),
    ("sessionbdp",),
    ("tmgireq", "tmgires", "sessionreq", "sessionres_af"),
)

SSBA_METADATA = (
    ("name", "ssba"),
    ("description", "MBS session establishment, signalling service-based architecture"),
    ("completion", COMPLETION_ACTION),
    ("load", "Ue"),
    ("processors", ",".join(PROCESSORS)),
    ("load_processor", "Uep"),
    ("note", "Rsf is the RRC/NAS service function (SF)"),
    ("alias", "Cnc_2 = Cn_2, Cnc_4 = Cn_4, Randp2 = Randp_2, Ran2 = Ran_2"),
    ("alias", "reconfig_1 = reconfig, setup_req = setupreq, mbsessioncomm = mbsessioncom"),
    ("alias", "get_affp = get_afp, get_rancp = get_ranp, v = r_v, Bdp_1[N_p] = Bdpp_1[N_p]"),
    ("alias", "prepare = prepare_randp | prepare_mbupf | prepare_bdp (one per NF)"),
    ("alias", "sessionres (BCC to AF) = sessionres_af"),
    ("note", "Bcc_4 = (get_bccp).(mbsessioncom).(mbsessionres).Bcc_5 is the single Bcc_4"),
    ("note", "every group starts in local state 1"),
    ("note", "Ue and Randp cooperate on reconfig; Randp_3 relays the RRC reconfiguration"),
    ("note", "each NF cooperates with its processor on get_* and the processor work actions"),
    ("note", "each processor task is preceded by its own acquisition"),
)


BASELINE_NF_DEFS = """
Ue_1 = (get_uep, r_p).(mbsjoinreq, r_iat).Ue_2;
Ue_2 = (reconfig, r_v).Ue_1;

Randp_1 = (sessionrandp, r_v).Randp_2;
Randp_2 = (get_randpp, r_p).(prepare_randp, r_v).Randp_3;
Randp_3 = (sessionrandpres, r_v).Randp_4;
Randp_4 = (reconfig, r_v).Randp_1;

Rsf_1 = (setupreq, r_v).Rsf_2;
Rsf_2 = (get_rsfp, r_p).(sharedreq, r_v).Rsf_3;
Rsf_3 = (sharedres, r_v).Rsf_4;
Rsf_4 = (setupres, r_v).Rsf_5;
Rsf_5 = (get_rsfp, r_p).(reconfig, r_v).Rsf_1;

Ran_1 = (sessioncreate, r_v).Ran_2;
Ran_2 = (get_ranp, r_p).(sessionrandp, r_v).(get_ranp, r_p).(sessionrandpres, r_v).(get_ranp, r_p).(sessionres, r_v).Ran_1;

Cn_1 = (mbsessioncom, r_v).Cn_2;
Cn_2 = (get_cnp, r_p).(sessioncreate, r_v).Cn_3;
Cn_3 = (sessionres, r_v).Cn_4;
Cn_4 = (get_cnp, r_p).(sessionupf, r_v).(get_cnp, r_p).(sessionupfres, r_v).(get_cnp, r_p).(mbsessionres, r_v).Cn_1;

Mbupf_1 = (sessionupf, r_v).Mbupf_2;
Mbupf_2 = (get_mbupfp, r_p).(prepare_mbupf, r_v).Mbupf_3;
Mbupf_3 = (sessionupfres, r_v).Mbupf_4;
Mbupf_4 = (shareddp, r_v).Mbupf_5;
Mbupf_5 = (get_mbupfp, r_p).(prepare_shared, r_v).Mbupf_6;
Mbupf_6 = (shareddpres, r_v).Mbupf_1;

Bcc_1 = (tmgireq, r_v).Bcc_2;
Bcc_2 = (get_bccp, r_p).(tmgires, r_v).Bcc_3;
Bcc_3 = (sessionreq, r_v).Bcc_4;
Bcc_4 = (get_bccp, r_p).(mbsessioncom, r_v).(mbsessionres, r_v).Bcc_5;
Bcc_5 = (get_bccp, r_p).(sessioncontext, r_v).(get_bccp, r_p).(sessionbdp, r_v).(get_bccp, r_p).(sessionbdpres, r_v).(get_bccp, r_p).(sessionres_af, r_v).Bcc_6;
Bcc_6 = (joinctx, r_v).Bcc_7;
Bcc_7 = (get_bccp, r_p).(joinctxres, r_v).Bcc_8;
Bcc_8 = (sharedreq, r_v).Bcc_9;
Bcc_9 = (get_bccp, r_p).(shareddp, r_v).(get_bccp, r_p).(shareddpres, r_v).(get_bccp, r_p).(sharedres, r_v).Bcc_1;

Bsf_1 = (sessioncontext, r_v).(mbsjoinreq, r_v).Bsf_2;
Bsf_2 = (get_bsfp, r_p).(joinctx, r_v).Bsf_3;
Bsf_3 = (joinctxres, r_v).Bsf_4;
Bsf_4 = (get_bsfp, r_p).(setupreq, r_v).Bsf_5;
Bsf_5 = (get_bsfp, r_p).(setupres, r_v).Bsf_1;

Bdp_1 = (sessionbdp, r_v).Bdp_2;
Bdp_2 = (get_bdpp, r_p).(prepare_bdp, r_v).Bdp_3;
Bdp_3 = (sessionbdpres, r_v).Bdp_1;

Af_1 = (get_afp, r_p).(tmgireq, r_v).Af_2;
Af_2 = (tmgires, r_v).Af_3;
Af_3 = (get_afp, r_p).(sessionreq, r_v).Af_4;
Af_4 = (sessionres_af, r_v).Af_1;
"""

BASELINE_PROC_WORK = {
    "Uep": ("get_uep", ["(mbsjoinreq, r_iat)"]),
    "Randpp": ("get_randpp", ["(prepare_randp, r_v)"]),
    "Rsfp": ("get_rsfp", ["(sharedreq, r_v)", "(reconfig, r_v)"]),
    "Ranp": ("get_ranp", ["(sessionrandp, r_v)", "(sessionrandpres, r_v)",
                          "(sessionres, r_v)"]),
    "Cnp": ("get_cnp", ["(sessioncreate, r_v)", "(sessionupf, r_v)",
                        "(sessionupfres, r_v)", "(mbsessionres, r_v)"]),
    "Mbupfp": ("get_mbupfp", ["(prepare_mbupf, r_v)", "(prepare_shared, r_v)"]),
    "Bccp": ("get_bccp", ["(tmgires, r_v)", "(mbsessioncom, r_v)",
                          "(sessioncontext, r_v)", "(sessionbdp, r_v)",
                          "(sessionbdpres, r_v)", "(sessionres_af, r_v)",
                          "(joinctxres, r_v)", "(shareddp, r_v)",
                          "(shareddpres, r_v)", "(sharedres, r_v)"]),
    "Bsfp": ("get_bsfp", ["(joinctx, r_v)", "(setupreq, r_v)", "(setupres, r_v)"]),
    "Bdpp": ("get_bdpp", ["(prepare_bdp, r_v)"]),
    "Afp": ("get_afp", ["(tmgireq, r_v)", "(sessionreq, r_v)"]),
}

BASELINE_COOP = (
    ("reconfig",),
    ("reconfig",),
    ("sessionrandp", "sessionrandpres"),
    ("sessioncreate", "sessionres"),
    ("sessionupf", "sessionupfres"),
    ("mbsessioncom", "mbsessionres", "sharedreq", "sharedres", "shareddp",
     "shareddpres"),
    ("mbsjoinreq", "setupreq", "setupres", "sessioncontext", "joinctx",
     "joinctxres"),
    ("sessionbdp", "sessionbdpres"),
    ("tmgireq", "tmgires", "sessionreq", "sessionres_af"),
)

BASELINE_METADATA = (
    ("name", "baseline5g"),
    ("description", "MBS session establishment, 3GPP 5G baseline (reconstructed, not normative)"),
    ("completion", COMPLETION_ACTION),
    ("load", "Ue"),
    ("processors", ",".join(PROCESSORS)),
    ("load_processor", "Uep"),
    ("mapping", "Bcc ~ MB-SMF/NEF, Bsf ~ AMF/SMF signalling, Rsf ~ NG-RAN control, Cn ~ SMF"),
    ("note", "explicit responses: sessionrandpres, sessionupfres, sessionbdpres, setupres"),
    ("note", "UE join served by the MB-SMF role: joinctx/joinctxres"),
    ("note", "shared delivery setup through the MB-SMF role: sharedreq, shareddp, shareddpres, sharedres"),
    ("note", "responses are processed by the requesting NF's processor"),
)


def _processor_defs(work):
    lines = []
    for proc, (get, tasks) in work.items():
        lines.append(f"{proc}_1 = ({get}, r_p).{proc}_2;")
        body = " + ".join(f"{t}.{proc}_1" for t in tasks)
        lines.append(f"{proc}_2 = {body};")
        lines.append("")
    return "\n".join(lines)


def _proc_alphabet(work):
    acts = set()
    for get, tasks in work.values():
        acts.add(get)
        acts.update(t[1:].split(",")[0] for t in tasks)
    return acts


def _assemble(cfg, nf_defs, proc_work, coop, metadata):
    n = cfg.n
    chain = f"Ue_1[{n}]"
    for (comp, key, _), acts in zip(NFS, coop):
        chain += f"\n    <{', '.join(sorted(acts))}> {comp}_1[{cfg.threads(key)}]"
    procs = f"Uep_1[{n}]"
    for _, key, proc in NFS:
        procs += f" <> {proc}_1[{cfg.processors(key)}]"
    sync = ", ".join(sorted(_proc_alphabet(proc_work)))
    pragmas = "\n".join(f"//@ {k}: {v}" for k, v in metadata)
    rates = "rates {\n" + "".join(
        f"    {k} = {float(v)!r};\n" for k, v in sorted(cfg.rates.items())) + "}\n"
    text = (f"{pragmas}\n{rates}{nf_defs}\n{_processor_defs(proc_work)}\n"
            f"system:\n    {chain}\n    <{sync}> ({procs})\n")
    return parse_model(text)


def build_ssba_model(cfg: ArchitectureConfig):
    """Canonical SSBA model for MBS session establishment."""
    return _assemble(cfg, SSBA_NF_DEFS, SSBA_PROC_WORK, SSBA_COOP, SSBA_METADATA)


def build_baseline_5g_model(cfg: ArchitectureConfig):
    """Reconstructed 3GPP 5G baseline under the same modelling conventions."""
    return _assemble(cfg, BASELINE_NF_DEFS, BASELINE_PROC_WORK, BASELINE_COOP,
                     BASELINE_METADATA)


BUILDERS = {"ssba": build_ssba_model, "baseline5g": build_baseline_5g_model}


def build(arch, cfg):
    return BUILDERS[arch](cfg)


def processor_groups(model):
    names = model.meta("processors")
    if names:
        return [p for p in names.split(",") if p]
    return []


def total_processor_population(model):
    procs = set(processor_groups(model)) - {"Uep"}
    return sum(g.population for g in iter_groups(model.system)
               if g.component in procs)


GOLDEN_N = 1000


def golden_text(arch, cfg):
    return serialize_model(build(arch, cfg))


def golden_path(arch, preset_id):
    """Shipped model file for ``arch`` under a preset (n = GOLDEN_N, N_t = 10)."""
    from .config import data_path
    return data_path("models", f"{arch}_{preset_id}.pepa")
