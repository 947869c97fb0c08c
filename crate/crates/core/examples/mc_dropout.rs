//! Monte Carlo dropout on one sentence: the fixed hypothesis is rescored
//! under perturbation and fresh hypotheses are generated.

use glassbox_qe::indicators::{d_combo, d_lex_sim, d_tp, d_var, mean_logprob};
use glassbox_qe::sim::{beam_search, build_model, mc_dropout_passes, DropoutMode, SimConfig};

fn main() -> glassbox_qe::Result<()> {
    let model = build_model(7, &SimConfig::default())?;
    let source = [0, 3, 12, 40, 1, 46];
    let best = beam_search(&model, &source, 4)?;
    println!("source     {}", model.source_tokens(&source).join(" "));
    println!("hypothesis {}", best.trace.hyp_tokens.join(" "));
    println!("TP         {:.4}", mean_logprob(&best.hypothesis.logprobs)?);

    let passes = mc_dropout_passes(&model, &source, &best.hypothesis.tokens, 30, 0.3, DropoutMode::Both, 11)?;
    println!("D-TP       {:.4}", d_tp(&passes)?);
    println!("D-Var      {:.4}", d_var(&passes)?);
    println!("D-Combo    {:.4}", d_combo(&passes)?);
    println!("D-Lex-Sim  {:.4}", d_lex_sim(&passes)?);
    for p in passes.passes.iter().take(3) {
        println!("  sample: {}", p.gen_tokens.as_ref().unwrap().join(" "));
    }
    Ok(())
}
