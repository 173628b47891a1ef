"""Seeded generator for a 10-class telco-style phrase corpus."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec
from .text_pipeline import LabeledPhrase

CLASSES = (
    "ATT", "CONFIG", "DISATT", "FDT", "GC",
    "OFF", "RIC", "SERV", "SERVIZIO_CLIENTI", "TS",
)

# disjoint across classes; extra words are synthesized when a larger pool is requested
KEYWORDS = {
    "ATT": ["attivazione", "sim", "contratto", "adsl", "attivare", "nuova", "linea",
            "fibra", "sottoscrivere", "portabilita", "numero", "intestare"],
    "CONFIG": ["configuro", "configurazione", "telefono", "impostazioni", "apn", "smartphone",
               "dispositivo", "router", "wifi", "parametri", "mms", "installare"],
    "DISATT": ["disattivazione", "disattivare", "recesso", "modem", "disdetta", "cessare",
               "chiudere", "restituire", "annullare", "rescindere", "cessazione", "revoca"],
    "FDT": ["consumo", "traffico", "residuo", "giga", "minuti", "soglia",
            "saldo", "dati", "rimanenti", "consumati", "verificare", "informazioni"],
    "GC": ["dettaglio", "esenzione", "agevolazione", "chiamate", "fattura", "addebito",
           "bolletta", "rimborso", "sconto", "invalidita", "documento", "storico"],
    "OFF": ["offerta", "promozione", "tariffa", "pacchetto", "convenienza", "piano",
            "prezzo", "mensile", "vantaggi", "bundle", "attivo", "novita"],
    "RIC": ["ricarica", "credito", "ricarico", "cellulare", "ricaricare", "euro",
            "importo", "carta", "automatica", "voucher", "taglio", "riattivare"],
    "SERV": ["servizio", "segreteria", "roaming", "avviso", "chiamata", "ricevuta",
             "blocco", "suoneria", "trasferimento", "opzione", "conferma", "notifiche"],
    "SERVIZIO_CLIENTI": ["operatore", "assistenza", "parlare", "persona", "clienti",
                         "reclamo", "aiuto", "contattare", "richiamare", "umano",
                         "consulente", "attesa"],
    "TS": ["password", "problema", "internet", "errore", "guasto", "lento",
           "funziona", "connessione", "segnale", "accesso", "bloccato", "reset"],
}

NOISE = ["come", "il", "mio", "la", "mia", "di", "per", "un", "una", "che",
         "non", "vorrei", "sapere", "posso", "del", "della", "con", "mi", "ho", "e",
         "a", "in", "su", "se", "al", "lo", "ci", "da", "piu", "gli"]


@dataclass(frozen=True)
class GeneratorSpec:
    classes: tuple[str, ...] = CLASSES
    phrases_per_class: int = 200
    keywords_per_class: int = 12
    shared_noise_vocab_size: int = 30
    noise_rate: float = 0.1
    seed: int = 42
    min_tokens: int = 4
    max_tokens: int = 12

    def validate(self) -> None:
        if self.phrases_per_class < 1:
            raise InvalidSpec("phrases_per_class must be >= 1")
        if self.keywords_per_class < 1 or self.shared_noise_vocab_size < 1:
            raise InvalidSpec("keyword and noise pools must be non-empty")
        if not 0.0 <= self.noise_rate < 1.0:
            raise InvalidSpec("noise_rate must lie in [0, 1)")
        if not self.classes or len(set(self.classes)) != len(self.classes):
            raise InvalidSpec("classes must be distinct and non-empty")
        if not 1 <= self.min_tokens <= self.max_tokens:
            raise InvalidSpec("token length bounds are inconsistent")


def keyword_pool(label: str, size: int) -> list[str]:
    base = list(KEYWORDS.get(label, []))[:size]
    # strip separators so a synthesized word stays a single token
    stem = re.sub(r"[\W_]+", "", label.lower())
    base += [f"{stem}kw{i}" for i in range(size - len(base))]
    return base


def noise_pool(size: int) -> list[str]:
    return NOISE[:size] + [f"rumore{i}" for i in range(size - len(NOISE))]


def generate(spec: GeneratorSpec = GeneratorSpec()) -> list[LabeledPhrase]:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    noise = noise_pool(spec.shared_noise_vocab_size)
    corpus = []
    for label in spec.classes:
        pool = keyword_pool(label, spec.keywords_per_class)
        for _ in range(spec.phrases_per_class):
            n = int(rng.integers(spec.min_tokens, spec.max_tokens + 1))
            words = [pool[i] for i in rng.integers(0, len(pool), size=n)]
            swap = rng.random(n) < spec.noise_rate
            picks = rng.integers(0, len(noise), size=n)
            tokens = [noise[p] if s else w for w, s, p in zip(words, swap, picks)]
            corpus.append(LabeledPhrase(label, " ".join(tokens)))
    return corpus
