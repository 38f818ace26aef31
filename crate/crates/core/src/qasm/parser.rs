use std::collections::HashMap;

use super::ast::{
    GateKind, Operand, QasmAst, RegisterDecl, RegisterKind, SourceLocation, Statement,
};
use super::lexer::{tokenize, Token, TokenKind};
use super::ParseError;

/// Parses a complete OpenQASM 2.0 program in the accepted subset.
///
/// Any error rejects the whole file.
pub fn parse(source: &str) -> Result<QasmAst, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        ast: QasmAst::default(),
        registers: HashMap::new(),
    };
    parser.header()?;
    while !parser.at(&TokenKind::Eof) {
        parser.statement()?;
    }
    Ok(parser.ast)
}

/// A parsed argument before broadcast expansion.
enum Arg {
    Indexed(Operand),
    Whole { register: String, size: usize },
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    ast: QasmAst,
    registers: HashMap<String, (RegisterKind, usize)>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn at(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    fn next(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if tok.kind != TokenKind::Eof {
            self.pos += 1;
        }
        tok
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let tok = self.peek();
        ParseError::Syntax {
            location: tok.location,
            message: format!("expected {expected}, found {}", tok.kind.describe()),
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<Token, ParseError> {
        if self.at(&kind) {
            Ok(self.next())
        } else {
            Err(self.unexpected(&kind.describe()))
        }
    }

    fn ident(&mut self) -> Result<(String, SourceLocation), ParseError> {
        match &self.peek().kind {
            TokenKind::Ident(name) => {
                let name = name.clone();
                let loc = self.next().location;
                Ok((name, loc))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn int(&mut self) -> Result<u64, ParseError> {
        match self.peek().kind {
            TokenKind::Int(n) => {
                self.next();
                Ok(n)
            }
            _ => Err(self.unexpected("integer")),
        }
    }

    fn header(&mut self) -> Result<(), ParseError> {
        let tok = self.peek().clone();
        if tok.kind != TokenKind::Ident("OPENQASM".into()) {
            return Err(ParseError::MissingHeader {
                location: tok.location,
            });
        }
        self.next();
        let version = self.next();
        match &version.kind {
            TokenKind::Real(v) if v == "2.0" => {}
            TokenKind::Int(2) => {}
            other => {
                return Err(ParseError::Syntax {
                    location: version.location,
                    message: format!("unsupported OPENQASM version {}", other.describe()),
                })
            }
        }
        self.expect(TokenKind::Semicolon)?;
        Ok(())
    }

    fn statement(&mut self) -> Result<(), ParseError> {
        let (word, location) = self.ident()?;
        match word.as_str() {
            "include" => {
                match self.peek().kind {
                    TokenKind::Str(_) => {
                        self.next();
                    }
                    _ => return Err(self.unexpected("file name string")),
                }
                self.expect(TokenKind::Semicolon)?;
            }
            "qreg" => self.register(RegisterKind::Quantum, location)?,
            "creg" => self.register(RegisterKind::Classical, location)?,
            "gate" | "opaque" => {
                let name = match &self.peek().kind {
                    TokenKind::Ident(n) => n.clone(),
                    _ => word.clone(),
                };
                return Err(ParseError::UnknownGate { location, name });
            }
            "if" => {
                return Err(ParseError::Syntax {
                    location,
                    message: "classical control is not supported".into(),
                })
            }
            "measure" => self.measure(location)?,
            _ => {
                let gate = GateKind::from_name(&word).ok_or_else(|| ParseError::UnknownGate {
                    location,
                    name: word.clone(),
                })?;
                self.gate(gate, location)?;
            }
        }
        Ok(())
    }

    fn register(&mut self, kind: RegisterKind, location: SourceLocation) -> Result<(), ParseError> {
        let (name, name_loc) = self.ident()?;
        self.expect(TokenKind::LBracket)?;
        let size_loc = self.peek().location;
        let size = self.int()? as usize;
        self.expect(TokenKind::RBracket)?;
        self.expect(TokenKind::Semicolon)?;
        if size == 0 {
            return Err(ParseError::Syntax {
                location: size_loc,
                message: "register size must be positive".into(),
            });
        }
        if self.registers.contains_key(&name) {
            return Err(ParseError::DuplicateRegister {
                location: name_loc,
                name,
            });
        }
        self.registers.insert(name.clone(), (kind, size));
        self.ast.registers.push(RegisterDecl {
            kind,
            name,
            size,
            location,
        });
        Ok(())
    }

    fn argument(&mut self, kind: RegisterKind) -> Result<Arg, ParseError> {
        let (name, loc) = self.ident()?;
        let (decl_kind, size) = match self.registers.get(&name) {
            Some(entry) => *entry,
            None => {
                return Err(ParseError::UndeclaredRegister {
                    location: loc,
                    name,
                })
            }
        };
        if decl_kind != kind {
            let wanted = match kind {
                RegisterKind::Quantum => "quantum",
                RegisterKind::Classical => "classical",
            };
            return Err(ParseError::Syntax {
                location: loc,
                message: format!("`{name}` is not a {wanted} register"),
            });
        }
        if !self.at(&TokenKind::LBracket) {
            return Ok(Arg::Whole {
                register: name,
                size,
            });
        }
        self.next();
        let index = self.int()? as usize;
        self.expect(TokenKind::RBracket)?;
        if index >= size {
            return Err(match kind {
                RegisterKind::Quantum => ParseError::QubitOutOfRange {
                    location: loc,
                    register: name,
                    index,
                    size,
                },
                RegisterKind::Classical => ParseError::BitOutOfRange {
                    location: loc,
                    register: name,
                    index,
                    size,
                },
            });
        }
        Ok(Arg::Indexed(Operand::new(name, index)))
    }

    fn argument_list(&mut self) -> Result<Vec<(Arg, SourceLocation)>, ParseError> {
        let mut args = Vec::new();
        loop {
            let loc = self.peek().location;
            args.push((self.argument(RegisterKind::Quantum)?, loc));
            if self.at(&TokenKind::Comma) {
                self.next();
            } else {
                break;
            }
        }
        Ok(args)
    }

    /// Expands whole-register arguments into one operand list per index.
    fn broadcast(args: Vec<(Arg, SourceLocation)>) -> Result<Vec<Vec<Operand>>, ParseError> {
        let mut width = None;
        for (arg, loc) in &args {
            if let Arg::Whole { size, .. } = arg {
                match width {
                    None => width = Some(*size),
                    Some(w) if w != *size => {
                        return Err(ParseError::Syntax {
                            location: *loc,
                            message: "register arguments have mismatched sizes".into(),
                        })
                    }
                    _ => {}
                }
            }
        }
        let rows = width.unwrap_or(1);
        Ok((0..rows)
            .map(|i| {
                args.iter()
                    .map(|(arg, _)| match arg {
                        Arg::Indexed(op) => op.clone(),
                        Arg::Whole { register, .. } => Operand::new(register.clone(), i),
                    })
                    .collect()
            })
            .collect())
    }

    fn flatten(args: Vec<(Arg, SourceLocation)>) -> Vec<Operand> {
        args.into_iter()
            .flat_map(|(arg, _)| match arg {
                Arg::Indexed(op) => vec![op],
                Arg::Whole { register, size } => (0..size)
                    .map(|i| Operand::new(register.clone(), i))
                    .collect(),
            })
            .collect()
    }

    fn gate(&mut self, gate: GateKind, location: SourceLocation) -> Result<(), ParseError> {
        let mut duration = None;
        if gate == GateKind::Delay {
            self.expect(TokenKind::LParen)?;
            duration = Some(self.int()?);
            // `delay(100dt)` is accepted; dt is the only unit.
            if let TokenKind::Ident(unit) = &self.peek().kind {
                if unit != "dt" {
                    return Err(self.unexpected("`dt` or `)`"));
                }
                self.next();
            }
            self.expect(TokenKind::RParen)?;
        } else if self.at(&TokenKind::LParen) {
            return Err(ParseError::Syntax {
                location: self.peek().location,
                message: format!("gate `{gate}` takes no parameters"),
            });
        }
        let args = self.argument_list()?;
        self.expect(TokenKind::Semicolon)?;
        if let Some(arity) = gate.arity() {
            if args.len() != arity {
                return Err(ParseError::Syntax {
                    location,
                    message: format!(
                        "`{gate}` takes {arity} qubit argument(s), got {}",
                        args.len()
                    ),
                });
            }
        }
        let rows = if gate == GateKind::Barrier {
            // A barrier spans all its arguments at once.
            vec![Self::flatten(args)]
        } else {
            Self::broadcast(args)?
        };
        for qubits in rows {
            for (i, q) in qubits.iter().enumerate() {
                if qubits[..i].contains(q) {
                    return Err(ParseError::DuplicateOperand {
                        location,
                        operand: q.to_string(),
                    });
                }
            }
            self.ast.statements.push(Statement {
                gate,
                qubits,
                duration,
                target: None,
                location,
            });
        }
        Ok(())
    }

    fn measure(&mut self, location: SourceLocation) -> Result<(), ParseError> {
        let qloc = self.peek().location;
        let qubit = self.argument(RegisterKind::Quantum)?;
        self.expect(TokenKind::Arrow)?;
        let cloc = self.peek().location;
        let bit = self.argument(RegisterKind::Classical)?;
        self.expect(TokenKind::Semicolon)?;
        let pairs = match (qubit, bit) {
            (Arg::Indexed(q), Arg::Indexed(c)) => vec![(q, c)],
            (
                Arg::Whole {
                    register: qr,
                    size: qs,
                },
                Arg::Whole {
                    register: cr,
                    size: cs,
                },
            ) if qs == cs => (0..qs)
                .map(|i| (Operand::new(qr.clone(), i), Operand::new(cr.clone(), i)))
                .collect(),
            (Arg::Whole { .. }, Arg::Whole { .. }) => {
                return Err(ParseError::Syntax {
                    location: cloc,
                    message: "register arguments have mismatched sizes".into(),
                })
            }
            _ => {
                return Err(ParseError::Syntax {
                    location: qloc,
                    message: "measure needs two indexed bits or two whole registers".into(),
                })
            }
        };
        for (q, c) in pairs {
            self.ast.statements.push(Statement {
                gate: GateKind::Measure,
                qubits: vec![q],
                duration: None,
                target: Some(c),
                location,
            });
        }
        Ok(())
    }
}
