# Word-level stress labels travel to sub-word tokens and back without timestamps.
from sentstress.core import StressAnnotatedSentence, aggregate_token_to_word, align_stress_labels, tokenize

gold = StressAnnotatedSentence("demo", "Tom ran homeward.", ["Tom", "ran", "homeward"], [0, 0, 1])
tokens, index = tokenize(gold.text)
print("tokens     ", tokens)
print("word index ", index)

aligned = align_stress_labels(gold, tokens, index)
print("token labels", aligned.token_labels)

# A word counts as stressed if any of its tokens is.
print("back to words", aggregate_token_to_word(aligned.token_labels, index))

# When the transcription has a different number of words there is nothing to align.
hyp_tokens, hyp_index = tokenize("Tom ran home ward.")
print(align_stress_labels(gold, hyp_tokens, hyp_index))
