#!/usr/bin/env python3
"""Writes `<fixture>.oracle` listings for every class-file and JAR fixture.

The listings are produced with the third-party `jawa` class-file library
(pip install jawa), not with the generator in this directory, so they act as
an independent disassembler oracle for the Rust parser.

Listing lines:

    entry <path>                                   (JARs only)
    error <path>                                   (JAR entry jawa cannot parse)
    class <name> super=<name|-> interfaces=<a,b|-> interface=<b> abstract=<b> final=<b> major=<n>
    method <name><descriptor> static=<b> abstract=<b> private=<b> final=<b>
    call <pc> <opcode-hex> <owner> <name> <descriptor>      (invokedynamic: owner/name/desc = -)
"""

import glob
import io
import os
import zipfile

import jawa.constants as jc
from jawa.cf import ClassFile

# jawa 2.2 predates CONSTANT_Dynamic (tag 17) and has no on-disk sizes for the
# module/package tags; extend its tables so such pools can be read.


class _Dynamic(jc.InvokeDynamic):
    TAG = 17


_types = list(jc._constant_types)
_types[17] = _Dynamic
jc._constant_types = tuple(_types)
_fmts = list(jc._constant_fmts) + [None] * (21 - len(jc._constant_fmts))
_fmts[17] = ('>HH', 4)
_fmts[19] = ('>H', 2)
_fmts[20] = ('>H', 2)
jc._constant_fmts = tuple(_fmts)

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', '..'))
FIX = os.path.join(ROOT, 'crates', 'core', 'tests', 'fixtures')

INVOKES = {0xb6, 0xb7, 0xb8, 0xb9, 0xba}


def b(v):
    return 'true' if v else 'false'


def listing(data):
    cf = ClassFile(io.BytesIO(data))
    flags = cf.access_flags.value
    out = []
    super_ = '-'
    if cf._super:
        super_ = cf.super_.name.value
    ifaces = ','.join(cf.constants[i].name.value for i in cf._interfaces) or '-'
    is_iface = bool(flags & 0x0200)
    out.append('class %s super=%s interfaces=%s interface=%s abstract=%s final=%s major=%d' % (
        cf.this.name.value, super_, ifaces, b(is_iface), b(is_iface or flags & 0x0400),
        b(flags & 0x0010), cf.version.major))
    for m in cf.methods:
        mf = m.access_flags.value
        out.append('method %s%s static=%s abstract=%s private=%s final=%s' % (
            m.name.value, m.descriptor.value, b(mf & 0x0008), b(mf & 0x0400), b(mf & 0x0002),
            b(mf & 0x0010)))
        code = m.code
        if code is None:
            continue
        for ins in code.disassemble():
            if ins.opcode not in INVOKES:
                continue
            if ins.opcode == 0xba:
                out.append('call %d 0x%02x - - -' % (ins.pos, ins.opcode))
                continue
            ref = cf.constants[ins.operands[0].value]
            nat = ref.name_and_type
            out.append('call %d 0x%02x %s %s %s' % (
                ins.pos, ins.opcode, ref.class_.name.value, nat.name.value,
                nat.descriptor.value))
    return out


def main():
    for path in sorted(glob.glob(os.path.join(FIX, 'classes', '*.class'))):
        with open(path, 'rb') as f:
            lines = listing(f.read())
        with open(path + '.oracle', 'w') as f:
            f.write('\n'.join(lines) + '\n')
    jars = sorted(glob.glob(os.path.join(FIX, 'jars', '*.jar')) +
                  glob.glob(os.path.join(FIX, 'repo', '**', '*.jar'), recursive=True))
    for path in jars:
        lines = []
        with zipfile.ZipFile(path) as zf:
            for info in zf.infolist():
                if not info.filename.endswith('.class'):
                    continue
                try:
                    body = listing(zf.read(info))
                except Exception:  # noqa: BLE001 - any failure means "unparseable"
                    lines.append('error %s' % info.filename)
                    continue
                lines.append('entry %s' % info.filename)
                lines += body
        with open(path + '.oracle', 'w') as f:
            f.write('\n'.join(lines) + ('\n' if lines else ''))


if __name__ == '__main__':
    main()
